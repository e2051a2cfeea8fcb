//! Process tensors: supernormalized Choi states over time-ordered legs.
//!
//! Leg convention for an n-step process built from an uncorrelated start:
//! `o1, (i2, o2), ..., (i_{n-1}, o_{n-1}), i_n [, o_n]`, chronological left to
//! right. `In` legs hold the states the process emits (what instruments act
//! on), `Out` legs receive the states instruments feed back; the feed at t_j
//! evolves into the emission at t_{j+1}. When the emitted initial state is
//! kept as a leg the layout gains a leading `i1`.

use crate::eig::{eigvals_hermitian, trace_norm};
use crate::error::{Error, Result};
use crate::legs::{
    Leg, LegId, LegLayout, LegRole, apply_superop, assemble, partial_trace, permute_legs,
};
use crate::matrix::{ComplexMatrix, ONE};
use crate::qinfo::{psi_plus, relative_entropy};

/// Relative tolerance on the causality trace hierarchy.
pub const CAUSALITY_TOL: f64 = 1e-8;

/// Relative PSD tolerance: min eigenvalue >= -PSD_TOL * max eigenvalue.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Clone)]
pub struct ProcessTensor {
    choi: ComplexMatrix,
    layout: LegLayout,
}

#[derive(Debug, Clone)]
pub struct CausalityReport {
    /// Residual ||tr_{i_t}[Y] - 1_{o_prev} ⊗ Y'||_1 per hierarchy level,
    /// keyed by the timestep of the traced input leg.
    pub levels: Vec<(i32, f64)>,
    pub trace: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub psd_pass: bool,
    pub causality: CausalityReport,
    pub trace: f64,
    pub expected_trace: f64,
    pub normalization_pass: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.psd_pass && self.causality.pass && self.normalization_pass
    }
}

impl ProcessTensor {
    /// Wrap without checking the invariants; used on constructive paths.
    pub fn new_unchecked(choi: ComplexMatrix, layout: LegLayout) -> Self {
        debug_assert_eq!(choi.dim(), layout.dim());
        Self { choi, layout }
    }

    /// Wrap and verify positivity, causality, and supernormalization.
    pub fn new(choi: ComplexMatrix, layout: LegLayout) -> Result<Self> {
        if choi.dim() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "Choi dimension {} vs layout dimension {}",
                choi.dim(),
                layout.dim()
            )));
        }
        let pt = Self { choi, layout };
        let report = pt.validate()?;
        if !report.pass() {
            return Err(Error::InvalidParameter(format!(
                "process tensor invariants violated: {report:?}"
            )));
        }
        Ok(pt)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn layout(&self) -> &LegLayout {
        &self.layout
    }

    pub fn trace(&self) -> f64 {
        self.choi.trace().re
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        let (h, _) = self.choi.hermitize();
        let vals = eigvals_hermitian(&h)?;
        let max_eigenvalue = vals.first().copied().unwrap_or(0.0);
        let min_eigenvalue = vals.last().copied().unwrap_or(0.0);
        let psd_pass = min_eigenvalue >= -PSD_TOL * max_eigenvalue.abs().max(1e-300);
        let causality = validate_causality(&self.choi, &self.layout)?;
        let trace = self.trace();
        let expected_trace = self.layout.output_dim() as f64;
        let normalization_pass = (trace - expected_trace).abs() <= 1e-8 * expected_trace.max(1.0);
        Ok(ValidationReport {
            min_eigenvalue,
            max_eigenvalue,
            psd_pass,
            causality,
            trace,
            expected_trace,
            normalization_pass,
        })
    }

    /// Trace out legs; traced `Out` legs divide the result by their dimension
    /// so the remainder keeps the supernormalization convention.
    pub fn marginalize(&self, traced: &[LegId]) -> Result<ProcessTensor> {
        let (mut m, layout) = partial_trace(&self.choi, &self.layout, traced)?;
        let mut div = 1.0;
        for &id in traced {
            if id.role == LegRole::Out {
                div *= self.layout.leg(id).unwrap().dim as f64;
            }
        }
        if div != 1.0 {
            m = m.scale_re(1.0 / div);
        }
        Ok(ProcessTensor::new_unchecked(m, layout))
    }

    pub fn permuted(&self, order: &[LegId]) -> Result<ProcessTensor> {
        let (m, layout) = permute_legs(&self.choi, &self.layout, order)?;
        Ok(ProcessTensor::new_unchecked(m, layout))
    }
}

/// Walk the causality trace hierarchy and report per-level residuals.
pub fn validate_causality(choi: &ComplexMatrix, layout: &LegLayout) -> Result<CausalityReport> {
    let trace = choi.trace().re;
    let tol = CAUSALITY_TOL * trace.abs().max(1.0);
    let mut levels = Vec::new();

    let mut m = choi.clone();
    let mut lay = layout.clone();

    // A trailing feed slot must be an uncorrelated identity factor.
    loop {
        let chron = lay.chronological_ids();
        match chron.last() {
            Some(&last) if last.role == LegRole::Out => {
                let d = lay.leg(last).unwrap().dim;
                let (rest, rest_layout) = partial_trace(&m, &lay, &[last])?;
                let rest = rest.scale_re(1.0 / d as f64);
                let ident = ComplexMatrix::identity(d);
                let id_layout = lay.sublayout(&[last])?;
                let cmp = assemble(&lay, &[(&ident, &id_layout), (&rest, &rest_layout)])?;
                levels.push((last.t, trace_norm(&(&m - &cmp))));
                m = rest;
                lay = rest_layout;
            }
            _ => break,
        }
    }

    // tr_{i_t}[Y] == 1_{o_prev} ⊗ Y' walking down the timesteps.
    loop {
        let chron = lay.chronological_ids();
        let last_in = match chron.iter().rev().find(|id| id.role == LegRole::In) {
            Some(&id) => id,
            None => break,
        };
        if *chron.last().unwrap() != last_in {
            // Legs after the last input would have been consumed above.
            return Err(Error::LayoutMismatch(format!(
                "unexpected leg after input {last_in} in the hierarchy walk"
            )));
        }
        let prev_out = chron
            .iter()
            .rev()
            .find(|id| id.role == LegRole::Out && id.t < last_in.t)
            .copied();
        let (traced, traced_layout) = partial_trace(&m, &lay, &[last_in])?;
        match prev_out {
            None => break,
            Some(o) => {
                let d = traced_layout.leg(o).unwrap().dim;
                let (rest, rest_layout) = partial_trace(&traced, &traced_layout, &[o])?;
                let rest = rest.scale_re(1.0 / d as f64);
                let ident = ComplexMatrix::identity(d);
                let id_layout = traced_layout.sublayout(&[o])?;
                let cmp = if rest_layout.is_empty() {
                    ident.scale(rest.get(0, 0))
                } else {
                    assemble(&traced_layout, &[(&ident, &id_layout), (&rest, &rest_layout)])?
                };
                levels.push((last_in.t, trace_norm(&(&traced - &cmp))));
                m = rest;
                lay = rest_layout;
            }
        }
    }

    let pass = levels.iter().all(|&(_, r)| r <= tol);
    Ok(CausalityReport { levels, trace, pass })
}

/// Dilated system-environment dynamics: an initial joint state and one CPTP
/// interval propagator per step gap, as row-major superoperators on S ⊗ E.
pub struct DilatedDynamics {
    pub sys_dim: usize,
    pub env_dim: usize,
    pub initial: ComplexMatrix,
    pub propagators: Vec<ComplexMatrix>,
}

impl DilatedDynamics {
    pub fn new(
        sys_dim: usize,
        env_dim: usize,
        initial: ComplexMatrix,
        propagators: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let d = sys_dim * env_dim;
        if initial.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "initial state dimension {} vs sys*env = {d}",
                initial.dim()
            )));
        }
        if !initial.is_hermitian(1e-10) {
            let residual = initial.hermiticity_residual();
            return Err(Error::NonHermitian { residual, tol: 1e-10 * initial.max_abs() });
        }
        if (initial.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(initial.trace().re));
        }
        for (k, p) in propagators.iter().enumerate() {
            if p.dim() != d * d {
                return Err(Error::DimensionMismatch(format!(
                    "propagator {k} has dimension {}, expected {}",
                    p.dim(),
                    d * d
                )));
            }
            let residual = trace_preservation_residual(p, d);
            if residual > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "propagator {k} is not trace-preserving: residual {residual:.3e}"
                )));
            }
        }
        Ok(Self { sys_dim, env_dim, initial, propagators })
    }
}

/// max_|  sum_o Choi[(k,o),(l,o)] - delta_kl | for a row-major superoperator.
pub fn trace_preservation_residual(superop: &ComplexMatrix, d: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..d {
        for l in 0..d {
            let mut acc = crate::matrix::ZERO;
            for o in 0..d {
                acc += superop.get(o * d + o, k * d + l);
            }
            let expect = if k == l { ONE } else { crate::matrix::ZERO };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

/// Choi matrix (legs: input, output) of a row-major superoperator.
pub fn superop_to_choi(superop: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let mut c = ComplexMatrix::zeros(d * d);
    for k in 0..d {
        for l in 0..d {
            for o in 0..d {
                for o2 in 0..d {
                    c.set(k * d + o, l * d + o2, superop.get(o * d + o2, k * d + l));
                }
            }
        }
    }
    c
}

/// How the first timestep of a built process tensor is represented.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InitialSlot {
    /// The emitted initial system state is kept as a leading input leg `i1`.
    EmittedState,
    /// The first slot is a preparation: the system register starts as half of
    /// a fresh pair on `o1` and the initial state contributes only its
    /// environment marginal. Exact for product initial states.
    PreparedInput,
}

const LIVE: LegId = LegId { t: i32::MIN + 1, role: LegRole::In };
const ENV: LegId = LegId { t: i32::MIN, role: LegRole::In };

/// Build the process tensor of `n_steps` probing timesteps from dilated
/// dynamics. Requires exactly `n_steps - 1` interval propagators.
pub fn build_process_tensor(
    dynamics: &DilatedDynamics,
    n_steps: usize,
    include_final_output: bool,
    initial_slot: InitialSlot,
) -> Result<ProcessTensor> {
    if n_steps < 1 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    if dynamics.propagators.len() != n_steps - 1 {
        return Err(Error::InvalidParameter(format!(
            "{} interval propagators supplied but {} steps require {}",
            dynamics.propagators.len(),
            n_steps,
            n_steps - 1
        )));
    }
    let d = dynamics.sys_dim;
    let de = dynamics.env_dim;

    let mut m;
    let mut lay;
    let mut has_live;
    match initial_slot {
        InitialSlot::EmittedState => {
            m = dynamics.initial.clone();
            lay = LegLayout::new(vec![
                Leg { id: LIVE, dim: d },
                Leg { id: ENV, dim: de },
            ])?;
            lay.rename(LIVE, LegId::input(1))?;
            has_live = false;
        }
        InitialSlot::PreparedInput => {
            let joint_layout = LegLayout::new(vec![
                Leg { id: LIVE, dim: d },
                Leg { id: ENV, dim: de },
            ])?;
            let (env, env_layout) = partial_trace(&dynamics.initial, &joint_layout, &[LIVE])?;
            let pair_layout = LegLayout::new(vec![
                Leg { id: LegId::output(1), dim: d },
                Leg { id: LIVE, dim: d },
            ])?;
            m = env.kron(&psi_plus(d));
            lay = env_layout.concat(&pair_layout)?;
            has_live = true;
        }
    }

    for j in 1..n_steps {
        if !has_live {
            // Feed: one half of a fresh pair becomes the slot output leg,
            // the other half the system carried into the next interval.
            let pair_layout = LegLayout::new(vec![
                Leg { id: LegId::output(j as i32), dim: d },
                Leg { id: LIVE, dim: d },
            ])?;
            m = m.kron(&psi_plus(d));
            lay = lay.concat(&pair_layout)?;
        }
        m = apply_superop(&m, &lay, &[LIVE, ENV], &dynamics.propagators[j - 1])?;
        // Emit at t_{j+1}.
        lay.rename(LIVE, LegId::input(j as i32 + 1))?;
        has_live = false;
    }

    if include_final_output {
        let pair = psi_plus(d);
        let pair_layout = LegLayout::new(vec![
            Leg { id: LegId::output(n_steps as i32), dim: d },
            Leg { id: LIVE, dim: d },
        ])?;
        m = m.kron(&pair);
        lay = lay.concat(&pair_layout)?;
        has_live = true;
    }

    let mut traced = vec![ENV];
    if has_live {
        traced.push(LIVE);
    }
    let (mut out, mut out_layout) = partial_trace(&m, &lay, &traced)?;
    let order = out_layout.chronological_ids();
    if order != out_layout.ids() {
        let (p, pl) = permute_legs(&out, &out_layout, &order)?;
        out = p;
        out_layout = pl;
    }
    Ok(ProcessTensor::new_unchecked(out, out_layout))
}

/// Tensor product of single-interval marginals: the nearest Markov process.
pub fn markov_product(pt: &ProcessTensor) -> Result<ProcessTensor> {
    let layout = pt.layout();
    let chron = layout.chronological_ids();
    // Blocks: each Out leg pairs with the next In leg; a leading In leg or a
    // trailing Out leg stands alone.
    let mut blocks: Vec<Vec<LegId>> = Vec::new();
    let mut used = vec![false; chron.len()];
    for (k, &id) in chron.iter().enumerate() {
        if used[k] {
            continue;
        }
        if id.role == LegRole::Out {
            let next_in = chron[k + 1..]
                .iter()
                .position(|n| n.role == LegRole::In)
                .map(|off| k + 1 + off);
            match next_in {
                Some(pos) => {
                    used[k] = true;
                    used[pos] = true;
                    blocks.push(vec![id, chron[pos]]);
                }
                None => {
                    used[k] = true;
                    blocks.push(vec![id]);
                }
            }
        } else {
            used[k] = true;
            blocks.push(vec![id]);
        }
    }
    let mut parts: Vec<(ComplexMatrix, LegLayout)> = Vec::new();
    for block in &blocks {
        let others: Vec<LegId> =
            layout.ids().into_iter().filter(|id| !block.contains(id)).collect();
        let marginal = pt.marginalize(&others)?;
        parts.push((marginal.choi().clone(), marginal.layout().clone()));
    }
    let part_refs: Vec<(&ComplexMatrix, &LegLayout)> =
        parts.iter().map(|(m, l)| (m, l)).collect();
    let choi = assemble(layout, &part_refs)?;
    Ok(ProcessTensor::new_unchecked(choi, layout.clone()))
}

/// Relative entropy (bits) between the normalized process tensor and its
/// normalized Markov product. +infinity on support mismatch.
pub fn non_markovianity(pt: &ProcessTensor) -> Result<f64> {
    let markov = markov_product(pt)?;
    let t = pt.trace();
    let (rho, _) = pt.choi().scale_re(1.0 / t).hermitize();
    let (sigma, _) = markov.choi().scale_re(1.0 / markov.trace()).hermitize();
    relative_entropy(&rho, &sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar;
    use crate::matrix::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn identity_superop(d: usize) -> ComplexMatrix {
        ComplexMatrix::identity(d * d)
    }

    #[test]
    fn single_step_trivial_env_is_the_initial_state() {
        let rho = ComplexMatrix::from_real(2, &[0.7, 0.2, 0.2, 0.3]);
        let dynamics = DilatedDynamics::new(2, 1, rho.clone(), vec![]).unwrap();
        let pt = build_process_tensor(&dynamics, 1, false, InitialSlot::EmittedState).unwrap();
        assert_eq!(pt.layout().len(), 1);
        assert!((pt.choi() - &rho).max_abs() < 1e-14);
    }

    #[test]
    fn identity_process_is_pairs_and_state() {
        let rho = ComplexMatrix::from_real(2, &[0.6, 0.1, 0.1, 0.4]);
        let n = 3;
        let dynamics =
            DilatedDynamics::new(2, 1, rho.clone(), vec![identity_superop(2); n - 1]).unwrap();
        let pt = build_process_tensor(&dynamics, n, false, InitialSlot::EmittedState).unwrap();
        // layout i1, o1, i2, o2, i3; expected rho_{i1} ⊗ psi+_{(o1,i2)} ⊗ psi+_{(o2,i3)}
        let pair = psi_plus(2);
        let l_rho = LegLayout::single(1, LegRole::In, 2);
        let l_p1 = LegLayout::new(vec![
            Leg::new(1, LegRole::Out, 2),
            Leg::new(2, LegRole::In, 2),
        ])
        .unwrap();
        let l_p2 = LegLayout::new(vec![
            Leg::new(2, LegRole::Out, 2),
            Leg::new(3, LegRole::In, 2),
        ])
        .unwrap();
        let expect =
            assemble(pt.layout(), &[(&rho, &l_rho), (&pair, &l_p1), (&pair, &l_p2)]).unwrap();
        assert!((pt.choi() - &expect).max_abs() < 1e-12);
        let report = pt.validate().unwrap();
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn built_tensors_pass_validation_and_random_matrices_fail() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let initial = haar::random_density(4, &mut rng);
        let props: Vec<ComplexMatrix> =
            (0..2).map(|_| haar::random_cptp_superop(4, 3, &mut rng)).collect();
        let dynamics = DilatedDynamics::new(2, 2, initial, props).unwrap();
        let pt = build_process_tensor(&dynamics, 3, false, InitialSlot::EmittedState).unwrap();
        let report = pt.validate().unwrap();
        assert!(report.pass(), "{report:?}");
        assert!((pt.trace() - pt.layout().output_dim() as f64).abs() < 1e-8);

        // prepared-input variant drops the leading emission
        let pt2 = build_process_tensor(&dynamics, 3, false, InitialSlot::PreparedInput).unwrap();
        assert_eq!(pt2.layout().len(), pt.layout().len() - 1);
        assert!(pt2.validate().unwrap().pass());

        // a random PSD matrix of the same dimensions generically fails causality
        let g = haar::ginibre(pt.choi().dim(), &mut rng);
        let psd = g.matmul(&g.dagger());
        let psd = psd.scale_re(pt.layout().output_dim() as f64 / psd.trace().re);
        let bad = validate_causality(&psd, pt.layout()).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn trailing_output_slot_validates() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let initial = haar::random_density(4, &mut rng);
        let props: Vec<ComplexMatrix> =
            (0..1).map(|_| haar::random_cptp_superop(4, 2, &mut rng)).collect();
        let dynamics = DilatedDynamics::new(2, 2, initial, props).unwrap();
        let pt = build_process_tensor(&dynamics, 2, true, InitialSlot::EmittedState).unwrap();
        assert_eq!(pt.layout().len(), 4); // i1, o1, i2, o2
        assert!(pt.validate().unwrap().pass());
        assert!((pt.trace() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn markov_product_fixed_point_and_validation() {
        // a product process is its own markov product
        let rho = ComplexMatrix::from_real(2, &[0.8, 0.0, 0.0, 0.2]);
        let dynamics = DilatedDynamics::new(2, 1, rho, vec![identity_superop(2); 2]).unwrap();
        let pt = build_process_tensor(&dynamics, 3, false, InitialSlot::EmittedState).unwrap();
        let markov = markov_product(&pt).unwrap();
        assert!((pt.choi() - markov.choi()).max_abs() < 1e-10);
        assert!(markov.validate().unwrap().pass());
        assert!(non_markovianity(&pt).unwrap().abs() < 1e-8);
    }

    #[test]
    fn correlated_dynamics_is_non_markov() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let initial = haar::random_density(4, &mut rng);
        let props: Vec<ComplexMatrix> =
            (0..2).map(|_| haar::random_cptp_superop(4, 2, &mut rng)).collect();
        let dynamics = DilatedDynamics::new(2, 2, initial, props).unwrap();
        let pt = build_process_tensor(&dynamics, 3, false, InitialSlot::EmittedState).unwrap();
        let markov = markov_product(&pt).unwrap();
        assert!(markov.validate().unwrap().pass());
        let nm = non_markovianity(&pt).unwrap();
        assert!(nm > 1e-4, "expected memory, got {nm}");
    }

    #[test]
    fn non_markovianity_invariant_under_leg_relabeling() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let initial = haar::random_density(4, &mut rng);
        let props: Vec<ComplexMatrix> =
            (0..2).map(|_| haar::random_cptp_superop(4, 2, &mut rng)).collect();
        let dynamics = DilatedDynamics::new(2, 2, initial, props).unwrap();
        let pt = build_process_tensor(&dynamics, 3, false, InitialSlot::EmittedState).unwrap();
        let nm = non_markovianity(&pt).unwrap();
        let mut order = pt.layout().ids();
        order.reverse();
        let shuffled = pt.permuted(&order).unwrap();
        let nm2 = non_markovianity(&shuffled).unwrap();
        assert!((nm - nm2).abs() < 1e-9);
    }

    #[test]
    fn marginalize_divides_output_dims() {
        let rho = ComplexMatrix::from_real(2, &[0.5, 0.0, 0.0, 0.5]);
        let dynamics = DilatedDynamics::new(2, 1, rho, vec![identity_superop(2); 1]).unwrap();
        let pt = build_process_tensor(&dynamics, 2, false, InitialSlot::EmittedState).unwrap();
        // tracing the last slot (o1, i2) leaves rho with trace 1
        let reduced = pt
            .marginalize(&[LegId::output(1), LegId::input(2)])
            .unwrap();
        assert!((reduced.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superop_choi_roundtrip() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let sup = haar::random_cptp_superop(2, 2, &mut rng);
        assert!(trace_preservation_residual(&sup, 2) < 1e-12);
        let choi = superop_to_choi(&sup, 2);
        // applying the Choi matches applying the superoperator
        let rho = haar::random_density(2, &mut rng);
        let via_choi = crate::qinfo::apply_choi_matrix(&choi, &rho).unwrap();
        let vec_rho: Vec<C64> = (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| rho.get(r, c))
            .collect();
        let out_vec = sup.matvec(&vec_rho);
        let via_sup = ComplexMatrix::from_vec(2, out_vec).unwrap();
        assert!((&via_choi - &via_sup).max_abs() < 1e-12);
    }
}
