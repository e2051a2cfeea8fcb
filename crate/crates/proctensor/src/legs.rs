//! Leg bookkeeping for operators living on tensor products of timestep spaces.
//!
//! A leg is identified by its timestep label and its role: `In` legs carry
//! states the process emits (inputs of the instrument applied there), `Out`
//! legs carry states fed back into the process (instrument outputs). Row-major
//! composite indexing throughout, leftmost leg slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix, ZERO};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegRole {
    #[serde(rename = "in")]
    In,
    #[serde(rename = "out")]
    Out,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct LegId {
    pub t: i32,
    pub role: LegRole,
}

impl LegId {
    pub fn input(t: i32) -> Self {
        Self { t, role: LegRole::In }
    }

    pub fn output(t: i32) -> Self {
        Self { t, role: LegRole::Out }
    }
}

impl std::fmt::Display for LegId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = match self.role {
            LegRole::In => "i",
            LegRole::Out => "o",
        };
        write!(f, "{}{}", self.t, r)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Leg {
    pub id: LegId,
    pub dim: usize,
}

impl Leg {
    pub fn new(t: i32, role: LegRole, dim: usize) -> Self {
        Self { id: LegId { t, role }, dim }
    }
}

/// Ordered list of legs describing the subsystem structure of a matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LegLayout {
    legs: Vec<Leg>,
}

impl LegLayout {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        for (i, a) in legs.iter().enumerate() {
            if a.dim == 0 {
                return Err(Error::InvalidParameter(format!("leg {} has dimension 0", a.id)));
            }
            for b in &legs[i + 1..] {
                if a.id == b.id {
                    return Err(Error::InvalidParameter(format!("duplicate leg label {}", a.id)));
                }
            }
        }
        Ok(Self { legs })
    }

    pub fn single(t: i32, role: LegRole, dim: usize) -> Self {
        Self { legs: vec![Leg::new(t, role, dim)] }
    }

    pub fn empty() -> Self {
        Self { legs: Vec::new() }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.legs.iter().map(|l| l.dim).product()
    }

    pub fn ids(&self) -> Vec<LegId> {
        self.legs.iter().map(|l| l.id).collect()
    }

    pub fn position(&self, id: LegId) -> Option<usize> {
        self.legs.iter().position(|l| l.id == id)
    }

    pub fn leg(&self, id: LegId) -> Option<&Leg> {
        self.legs.iter().find(|l| l.id == id)
    }

    pub fn contains(&self, id: LegId) -> bool {
        self.position(id).is_some()
    }

    /// Legs with the given ids, kept in this layout's order.
    pub fn sublayout(&self, ids: &[LegId]) -> Result<LegLayout> {
        for &id in ids {
            if !self.contains(id) {
                return Err(Error::UnknownLeg(id));
            }
        }
        Ok(LegLayout {
            legs: self.legs.iter().filter(|l| ids.contains(&l.id)).copied().collect(),
        })
    }

    /// Legs not in `ids`, kept in order.
    pub fn complement(&self, ids: &[LegId]) -> LegLayout {
        LegLayout {
            legs: self.legs.iter().filter(|l| !ids.contains(&l.id)).copied().collect(),
        }
    }

    pub fn concat(&self, other: &LegLayout) -> Result<LegLayout> {
        let mut legs = self.legs.clone();
        legs.extend_from_slice(&other.legs);
        LegLayout::new(legs)
    }

    /// Input-space dimension: product of dims over `In` legs.
    pub fn input_dim(&self) -> usize {
        self.legs.iter().filter(|l| l.id.role == LegRole::In).map(|l| l.dim).product()
    }

    /// Output-space dimension: product of dims over `Out` legs.
    pub fn output_dim(&self) -> usize {
        self.legs.iter().filter(|l| l.id.role == LegRole::Out).map(|l| l.dim).product()
    }

    /// Ids sorted by (timestep, In before Out), the chronological slot order.
    pub fn chronological_ids(&self) -> Vec<LegId> {
        let mut ids = self.ids();
        ids.sort();
        ids
    }

    pub fn timesteps(&self) -> Vec<i32> {
        let mut ts: Vec<i32> = self.legs.iter().map(|l| l.id.t).collect();
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    pub fn rename(&mut self, from: LegId, to: LegId) -> Result<()> {
        if self.contains(to) {
            return Err(Error::InvalidParameter(format!("leg label {to} already present")));
        }
        match self.legs.iter_mut().find(|l| l.id == from) {
            Some(l) => {
                l.id = to;
                Ok(())
            }
            None => Err(Error::UnknownLeg(from)),
        }
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.legs.len();
        let mut s = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.legs[i + 1].dim;
        }
        s
    }

    /// Offset table over a subset of positions: entry k is the row offset of
    /// the k-th assignment (row-major over the subset in the given order).
    fn offset_table(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let dims: Vec<usize> = positions.iter().map(|&p| self.legs[p].dim).collect();
        let total: usize = dims.iter().product();
        let mut table = vec![0usize; total];
        for (idx, slot) in table.iter_mut().enumerate() {
            let mut rem = idx;
            let mut off = 0;
            for (j, &p) in positions.iter().enumerate().rev() {
                let d = dims[j];
                off += (rem % d) * strides[p];
                rem /= d;
            }
            *slot = off;
        }
        table
    }
}

fn check_dim(m: &ComplexMatrix, layout: &LegLayout) -> Result<()> {
    if m.dim() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix dimension {} does not match layout dimension {}",
            m.dim(),
            layout.dim()
        )));
    }
    Ok(())
}

/// Reorder subsystems. Involutive: permuting back recovers the input.
pub fn permute_legs(
    m: &ComplexMatrix,
    layout: &LegLayout,
    new_order: &[LegId],
) -> Result<(ComplexMatrix, LegLayout)> {
    check_dim(m, layout)?;
    if new_order.len() != layout.len() {
        return Err(Error::InvalidPermutation);
    }
    let mut positions = Vec::with_capacity(new_order.len());
    for &id in new_order {
        match layout.position(id) {
            Some(p) if !positions.contains(&p) => positions.push(p),
            _ => return Err(Error::InvalidPermutation),
        }
    }
    let new_layout = LegLayout::new(
        positions.iter().map(|&p| layout.legs()[p]).collect(),
    )?;
    let map = layout.offset_table(&positions);
    let d = m.dim();
    let mut out = ComplexMatrix::zeros(d);
    for (r_new, &r_old) in map.iter().enumerate() {
        let dst = &mut out.data_mut()[r_new * d..(r_new + 1) * d];
        for (c_new, &c_old) in map.iter().enumerate() {
            dst[c_new] = m.get(r_old, c_old);
        }
    }
    Ok((out, new_layout))
}

/// Partial trace over the given legs. Preserves the total trace.
pub fn partial_trace(
    m: &ComplexMatrix,
    layout: &LegLayout,
    traced: &[LegId],
) -> Result<(ComplexMatrix, LegLayout)> {
    check_dim(m, layout)?;
    let mut tr_pos = Vec::with_capacity(traced.len());
    for &id in traced {
        match layout.position(id) {
            Some(p) if !tr_pos.contains(&p) => tr_pos.push(p),
            Some(_) => return Err(Error::InvalidParameter(format!("leg {id} traced twice"))),
            None => return Err(Error::UnknownLeg(id)),
        }
    }
    let keep_pos: Vec<usize> =
        (0..layout.len()).filter(|p| !tr_pos.contains(p)).collect();
    let keep_layout = LegLayout::new(
        keep_pos.iter().map(|&p| layout.legs()[p]).collect(),
    )?;
    let keep_map = layout.offset_table(&keep_pos);
    let tr_map = layout.offset_table(&tr_pos);
    let dk = keep_layout.dim();
    let mut out = ComplexMatrix::zeros(dk);
    for (rk, &ro) in keep_map.iter().enumerate() {
        let dst = &mut out.data_mut()[rk * dk..(rk + 1) * dk];
        for (ck, &co) in keep_map.iter().enumerate() {
            let mut acc = ZERO;
            for &s in &tr_map {
                acc += m.get(ro + s, co + s);
            }
            dst[ck] += acc;
        }
    }
    Ok((out, keep_layout))
}

/// Link product: contract two operators over their shared legs,
/// `tr_shared[(A^{T_shared} ⊗ 1)(1 ⊗ B)]`. The transpose is applied to the
/// `a` side, which is the instrument side in every use here. Output legs are
/// the `a`-only legs followed by the `b`-only legs, each in original order.
pub fn link(
    a: &ComplexMatrix,
    la: &LegLayout,
    b: &ComplexMatrix,
    lb: &LegLayout,
) -> Result<(ComplexMatrix, LegLayout)> {
    check_dim(a, la)?;
    check_dim(b, lb)?;
    let shared: Vec<LegId> = la.ids().into_iter().filter(|id| lb.contains(*id)).collect();
    for &id in &shared {
        let (da, db) = (la.leg(id).unwrap().dim, lb.leg(id).unwrap().dim);
        if da != db {
            return Err(Error::DimensionMismatch(format!(
                "shared leg {id} has dimension {da} on one side and {db} on the other"
            )));
        }
    }
    let a_keep_pos: Vec<usize> = (0..la.len())
        .filter(|&p| !shared.contains(&la.legs()[p].id))
        .collect();
    let b_keep_pos: Vec<usize> = (0..lb.len())
        .filter(|&p| !shared.contains(&lb.legs()[p].id))
        .collect();
    let a_sh_pos: Vec<usize> = shared.iter().map(|&id| la.position(id).unwrap()).collect();
    let b_sh_pos: Vec<usize> = shared.iter().map(|&id| lb.position(id).unwrap()).collect();

    let a_keep = la.offset_table(&a_keep_pos);
    let b_keep = lb.offset_table(&b_keep_pos);
    let a_sh = la.offset_table(&a_sh_pos);
    let b_sh = lb.offset_table(&b_sh_pos);

    let (na_keep, nb_keep, nsh) = (a_keep.len(), b_keep.len(), a_sh.len());
    let out_layout = LegLayout::new(
        a_keep_pos
            .iter()
            .map(|&p| la.legs()[p])
            .chain(b_keep_pos.iter().map(|&p| lb.legs()[p]))
            .collect(),
    )?;
    let dout = na_keep * nb_keep;
    let mut out = ComplexMatrix::zeros(dout);
    for sr in 0..nsh {
        for sc in 0..nsh {
            for (xa, &oa) in a_keep.iter().enumerate() {
                for (xa2, &oa2) in a_keep.iter().enumerate() {
                    let av = a.get(a_sh[sr] + oa, a_sh[sc] + oa2);
                    if av == ZERO {
                        continue;
                    }
                    for (yb, &ob) in b_keep.iter().enumerate() {
                        let r = xa * nb_keep + yb;
                        let br = b_sh[sr] + ob;
                        for (yb2, &ob2) in b_keep.iter().enumerate() {
                            let bv = b.get(br, b_sh[sc] + ob2);
                            out.add_at(r, xa2 * nb_keep + yb2, av * bv);
                        }
                    }
                }
            }
        }
    }
    Ok((out, out_layout))
}

/// Expectation-style full contraction `tr[A^T B]` for operators sharing all legs.
pub fn contract_full(
    a: &ComplexMatrix,
    la: &LegLayout,
    b: &ComplexMatrix,
    lb: &LegLayout,
) -> Result<C64> {
    if la.ids().len() != lb.ids().len() || la.ids().iter().any(|id| !lb.contains(*id)) {
        return Err(Error::LayoutMismatch(
            "full contraction requires identical leg sets".into(),
        ));
    }
    let (z, lz) = if la.ids() == lb.ids() {
        return Ok(a.contract_t(b));
    } else {
        link(a, la, b, lb)?
    };
    debug_assert!(lz.is_empty());
    Ok(z.get(0, 0))
}

/// Tensor a collection of operators, each on its own legs, into one operator
/// on `layout`. The parts must cover every leg exactly once.
pub fn assemble(
    layout: &LegLayout,
    parts: &[(&ComplexMatrix, &LegLayout)],
) -> Result<ComplexMatrix> {
    let mut seen: Vec<LegId> = Vec::new();
    for (m, pl) in parts {
        check_dim(m, pl)?;
        for id in pl.ids() {
            if !layout.contains(id) {
                return Err(Error::UnknownLeg(id));
            }
            if seen.contains(&id) {
                return Err(Error::LayoutMismatch(format!("leg {id} supplied twice")));
            }
            seen.push(id);
        }
    }
    if seen.len() != layout.len() {
        return Err(Error::LayoutMismatch(
            "assembled parts do not cover the layout".into(),
        ));
    }
    let d = layout.dim();
    // Per-part index of each global index.
    let strides = layout.strides();
    let mut part_index: Vec<Vec<usize>> = Vec::with_capacity(parts.len());
    for (_, pl) in parts {
        let positions: Vec<usize> =
            pl.ids().iter().map(|&id| layout.position(id).unwrap()).collect();
        let pstrides = pl.strides();
        let mut map = vec![0usize; d];
        for (g, slot) in map.iter_mut().enumerate() {
            let mut idx = 0;
            for (j, &p) in positions.iter().enumerate() {
                let digit = (g / strides[p]) % layout.legs()[p].dim;
                idx += digit * pstrides[j];
            }
            *slot = idx;
        }
        part_index.push(map);
    }
    let mut out = ComplexMatrix::zeros(d);
    for r in 0..d {
        for c in 0..d {
            let mut v = crate::matrix::ONE;
            for (p, (m, _)) in parts.iter().enumerate() {
                v *= m.get(part_index[p][r], part_index[p][c]);
                if v == ZERO {
                    break;
                }
            }
            if v != ZERO {
                out.set(r, c, v);
            }
        }
    }
    Ok(out)
}

/// Apply a superoperator (row-major vectorization) to the given legs of `m`,
/// leaving every other leg untouched.
pub fn apply_superop(
    m: &ComplexMatrix,
    layout: &LegLayout,
    target: &[LegId],
    superop: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_dim(m, layout)?;
    let mut t_pos = Vec::with_capacity(target.len());
    for &id in target {
        match layout.position(id) {
            Some(p) => t_pos.push(p),
            None => return Err(Error::UnknownLeg(id)),
        }
    }
    let dsub: usize = t_pos.iter().map(|&p| layout.legs()[p].dim).product();
    if superop.dim() != dsub * dsub {
        return Err(Error::DimensionMismatch(format!(
            "superoperator dimension {} does not match target legs (d^2 = {})",
            superop.dim(),
            dsub * dsub
        )));
    }
    let e_pos: Vec<usize> = (0..layout.len()).filter(|p| !t_pos.contains(p)).collect();
    let tmap = layout.offset_table(&t_pos);
    let emap = layout.offset_table(&e_pos);
    let mut out = ComplexMatrix::zeros(m.dim());
    let mut vin = vec![ZERO; dsub * dsub];
    for &er in &emap {
        for &ec in &emap {
            for (s, &ts) in tmap.iter().enumerate() {
                for (s2, &ts2) in tmap.iter().enumerate() {
                    vin[s * dsub + s2] = m.get(ts + er, ts2 + ec);
                }
            }
            let vout = superop.matvec(&vin);
            for (s, &ts) in tmap.iter().enumerate() {
                for (s2, &ts2) in tmap.iter().enumerate() {
                    out.set(ts + er, ts2 + ec, vout[s * dsub + s2]);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{ONE, qubit};

    fn bell_projector() -> ComplexMatrix {
        // |Phi+><Phi+| on two qubits
        let mut m = ComplexMatrix::zeros(4);
        for &r in &[0usize, 3] {
            for &c in &[0usize, 3] {
                m.set(r, c, ONE * 0.5);
            }
        }
        m
    }

    fn two_qubit_layout() -> LegLayout {
        LegLayout::new(vec![Leg::new(1, LegRole::In, 2), Leg::new(2, LegRole::In, 2)]).unwrap()
    }

    #[test]
    fn permute_identity_and_involution() {
        let layout = two_qubit_layout();
        let m = ComplexMatrix::from_fn(4, |r, c| C64::new((r * 4 + c) as f64, (r + c) as f64));
        let ids = layout.ids();
        let (same, _) = permute_legs(&m, &layout, &ids).unwrap();
        assert!((&same - &m).max_abs() == 0.0);

        let swapped: Vec<LegId> = vec![ids[1], ids[0]];
        let (sw, swl) = permute_legs(&m, &layout, &swapped).unwrap();
        let (back, _) = permute_legs(&sw, &swl, &ids).unwrap();
        assert!((&back - &m).max_abs() < 1e-14);
    }

    #[test]
    fn permute_swaps_product_factors() {
        let layout = two_qubit_layout();
        let a = qubit::sigma_x();
        let b = qubit::sigma_z();
        let ab = a.kron(&b);
        let ba = b.kron(&a);
        let ids = layout.ids();
        let (sw, _) = permute_legs(&ab, &layout, &[ids[1], ids[0]]).unwrap();
        assert!((&sw - &ba).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_bell_marginal() {
        let layout = two_qubit_layout();
        let bell = bell_projector();
        let ids = layout.ids();
        for &traced in &ids {
            let (marg, ml) = partial_trace(&bell, &layout, &[traced]).unwrap();
            assert_eq!(ml.len(), 1);
            let expect = ComplexMatrix::identity(2).scale_re(0.5);
            assert!((&marg - &expect).max_abs() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_all_gives_trace() {
        let layout = two_qubit_layout();
        let m = ComplexMatrix::from_fn(4, |r, c| C64::new((r + 2 * c) as f64, 0.0));
        let (t, tl) = partial_trace(&m, &layout, &layout.ids()).unwrap();
        assert!(tl.is_empty());
        assert!((t.get(0, 0) - m.trace()).norm() < 1e-13);
    }

    #[test]
    fn partial_trace_product_factorizes() {
        let layout = two_qubit_layout();
        let rho_a = qubit::projector(&qubit::ket_plus_x());
        let rho_b = ComplexMatrix::from_real(2, &[0.7, 0.1, 0.1, 0.3]);
        let prod = rho_a.kron(&rho_b);
        let (left, _) = partial_trace(&prod, &layout, &[layout.ids()[1]]).unwrap();
        let scaled = rho_a.scale(rho_b.trace());
        assert!((&left - &scaled).max_abs() < 1e-15);
    }

    #[test]
    fn link_applies_choi_identity() {
        // Choi of the identity channel contracted with a state feeds it through.
        let input_leg = LegLayout::single(0, LegRole::Out, 2);
        let rho = ComplexMatrix::from_real(2, &[0.6, 0.2, 0.2, 0.4]);
        // psi_plus on (out at t0 shared, in at t1 kept)
        let pair_layout = LegLayout::new(vec![
            Leg::new(0, LegRole::Out, 2),
            Leg::new(1, LegRole::In, 2),
        ])
        .unwrap();
        let mut pair = ComplexMatrix::zeros(4);
        for a in 0..2 {
            for b in 0..2 {
                pair.set(a * 2 + a, b * 2 + b, ONE);
            }
        }
        let (out, ol) = link(&rho, &input_leg, &pair, &pair_layout).unwrap();
        assert_eq!(ol.len(), 1);
        assert!((&out - &rho).max_abs() < 1e-15);
    }

    #[test]
    fn assemble_matches_kron_in_layout_order() {
        let layout = two_qubit_layout();
        let a = qubit::sigma_x();
        let b = ComplexMatrix::from_real(2, &[0.3, 0.0, 0.0, 0.7]);
        let la = LegLayout::single(1, LegRole::In, 2);
        let lb = LegLayout::single(2, LegRole::In, 2);
        let direct = a.kron(&b);
        let asm = assemble(&layout, &[(&a, &la), (&b, &lb)]).unwrap();
        assert!((&asm - &direct).max_abs() < 1e-15);
        // parts listed in the other order still land on the right legs
        let asm2 = assemble(&layout, &[(&b, &lb), (&a, &la)]).unwrap();
        assert!((&asm2 - &direct).max_abs() < 1e-15);
    }

    #[test]
    fn apply_superop_on_second_leg() {
        // superoperator of conjugation by sigma_x, row-major vec
        let x = qubit::sigma_x();
        let sup = x.kron(&x.transpose());
        let layout = two_qubit_layout();
        let rho_a = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]);
        let rho_b = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]);
        let joint = rho_a.kron(&rho_b);
        let out = apply_superop(&joint, &layout, &[layout.ids()[1]], &sup).unwrap();
        let expect = rho_a.kron(&ComplexMatrix::from_real(2, &[0.0, 0.0, 0.0, 1.0]));
        assert!((&out - &expect).max_abs() < 1e-15);
    }
}
