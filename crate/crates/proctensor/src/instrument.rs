//! Generalized instruments as outcome-labeled sets of CP-map Choi elements.
//!
//! Elements are stored as plain Chois on the slot legs they consume, input
//! leg first; the transposes appearing in the Born rule and in conditioning
//! are applied by the consuming operation, never pre-baked here.

use crate::eig::{eig_hermitian, eigvals_hermitian};
use crate::error::{Error, Result};
use crate::legs::{Leg, LegLayout, LegRole};
use crate::matrix::{C64, ComplexMatrix, ONE, qubit};
use crate::qinfo::psi_plus;

/// Elements of one timestep slot of a product instrument.
#[derive(Clone)]
pub struct StepElements {
    pub t: i32,
    pub layout: LegLayout,
    pub labels: Vec<String>,
    pub elements: Vec<ComplexMatrix>,
}

impl StepElements {
    pub fn new(
        t: i32,
        layout: LegLayout,
        labels: Vec<String>,
        elements: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if labels.len() != elements.len() || elements.is_empty() {
            return Err(Error::InvalidParameter(
                "step needs matching, nonempty labels and elements".into(),
            ));
        }
        for e in &elements {
            if e.dim() != layout.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "element dimension {} vs slot dimension {}",
                    e.dim(),
                    layout.dim()
                )));
            }
        }
        Ok(Self { t, layout, labels, elements })
    }

    pub fn det_sum(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.layout.dim());
        for e in &self.elements {
            s = &s + e;
        }
        s
    }
}

enum Body {
    Explicit { labels: Vec<String>, elements: Vec<ComplexMatrix> },
    Product { steps: Vec<StepElements> },
}

/// An instrument: a set of CP elements over the legs in `layout`, whose
/// deterministic sum obeys the tester trace conditions.
pub struct Instrument {
    pub name: String,
    layout: LegLayout,
    body: Body,
}

#[derive(Debug, Clone)]
pub struct InstrumentReport {
    pub min_element_eigenvalue: f64,
    pub det_sum_trace: f64,
    pub expected_trace: f64,
    pub hierarchy_residual: f64,
    pub pass: bool,
}

impl Instrument {
    pub fn from_elements(
        name: impl Into<String>,
        layout: LegLayout,
        labels: Vec<String>,
        elements: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if labels.len() != elements.len() || elements.is_empty() {
            return Err(Error::InvalidParameter(
                "instrument needs matching, nonempty labels and elements".into(),
            ));
        }
        for e in &elements {
            if e.dim() != layout.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "element dimension {} vs layout dimension {}",
                    e.dim(),
                    layout.dim()
                )));
            }
        }
        Ok(Self { name: name.into(), layout, body: Body::Explicit { labels, elements } })
    }

    /// Product of per-timestep element sets; outcomes are the cartesian
    /// product in row-major order (first step slowest).
    pub fn product(name: impl Into<String>, mut steps: Vec<StepElements>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidParameter("product instrument needs steps".into()));
        }
        steps.sort_by_key(|s| s.t);
        let mut layout = LegLayout::empty();
        for s in &steps {
            layout = layout.concat(&s.layout)?;
        }
        Ok(Self { name: name.into(), layout, body: Body::Product { steps } })
    }

    pub fn layout(&self) -> &LegLayout {
        &self.layout
    }

    pub fn steps(&self) -> Option<&[StepElements]> {
        match &self.body {
            Body::Product { steps } => Some(steps),
            Body::Explicit { .. } => None,
        }
    }

    pub fn n_outcomes(&self) -> usize {
        match &self.body {
            Body::Explicit { elements, .. } => elements.len(),
            Body::Product { steps } => steps.iter().map(|s| s.elements.len()).product(),
        }
    }

    /// Per-step outcome indices of a flat outcome index.
    pub fn step_indices(&self, idx: usize) -> Vec<usize> {
        match &self.body {
            Body::Explicit { .. } => vec![idx],
            Body::Product { steps } => {
                let mut rem = idx;
                let mut out = vec![0; steps.len()];
                for (j, s) in steps.iter().enumerate().rev() {
                    out[j] = rem % s.elements.len();
                    rem /= s.elements.len();
                }
                out
            }
        }
    }

    pub fn label(&self, idx: usize) -> String {
        match &self.body {
            Body::Explicit { labels, .. } => labels[idx].clone(),
            Body::Product { steps } => {
                let parts = self.step_indices(idx);
                parts
                    .iter()
                    .zip(steps.iter())
                    .map(|(&x, s)| s.labels[x].clone())
                    .collect::<Vec<_>>()
                    .join(".")
            }
        }
    }

    /// Materialize one element on the full layout.
    pub fn element(&self, idx: usize) -> ComplexMatrix {
        match &self.body {
            Body::Explicit { elements, .. } => elements[idx].clone(),
            Body::Product { steps } => {
                let parts = self.step_indices(idx);
                let mut m: Option<ComplexMatrix> = None;
                for (j, s) in steps.iter().enumerate() {
                    let e = &s.elements[parts[j]];
                    m = Some(match m {
                        None => e.clone(),
                        Some(prev) => prev.kron(e),
                    });
                }
                m.unwrap()
            }
        }
    }

    /// Deterministic element: the sum over all outcomes.
    pub fn det_sum(&self) -> ComplexMatrix {
        match &self.body {
            Body::Explicit { elements, .. } => {
                let mut s = ComplexMatrix::zeros(self.layout.dim());
                for e in elements {
                    s = &s + e;
                }
                s
            }
            Body::Product { steps } => {
                let mut m: Option<ComplexMatrix> = None;
                for s in steps {
                    let sum = s.det_sum();
                    m = Some(match m {
                        None => sum,
                        Some(prev) => prev.kron(&sum),
                    });
                }
                m.unwrap()
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layout.output_dim()
    }

    /// The proportionality constant c with det_sum == c * identity, when the
    /// instrument is unbiased in that sense.
    pub fn unbiased_constant(&self) -> Option<f64> {
        let s = self.det_sum();
        let d = s.dim() as f64;
        let c = s.trace().re / d;
        let dev = (&s - &ComplexMatrix::identity(s.dim()).scale_re(c)).max_abs();
        if dev <= 1e-8 * c.abs().max(1.0) {
            Some(c)
        } else {
            None
        }
    }

    pub fn is_unbiased(&self) -> bool {
        self.unbiased_constant().is_some()
    }

    /// Element positivity, deterministic-sum normalization, and the
    /// per-slot trace-out conditions of the complementary hierarchy.
    pub fn validate(&self) -> Result<InstrumentReport> {
        let mut min_eig = f64::INFINITY;
        let mut check_psd = |e: &ComplexMatrix| -> Result<()> {
            let (h, _) = e.hermitize();
            let vals = eigvals_hermitian(&h)?;
            if let Some(&v) = vals.last() {
                min_eig = min_eig.min(v);
            }
            Ok(())
        };
        match &self.body {
            Body::Explicit { elements, .. } => {
                for e in elements {
                    check_psd(e)?;
                }
            }
            Body::Product { steps } => {
                for s in steps {
                    for e in &s.elements {
                        check_psd(e)?;
                    }
                }
            }
        }
        let det_sum_trace;
        let mut hierarchy_residual = 0.0f64;
        match &self.body {
            Body::Product { steps } => {
                let mut trace = 1.0;
                for s in steps {
                    let b = s.det_sum();
                    trace *= b.trace().re;
                    hierarchy_residual = hierarchy_residual.max(step_hierarchy_residual(&b, &s.layout)?);
                }
                det_sum_trace = trace;
            }
            Body::Explicit { .. } => {
                let b = self.det_sum();
                det_sum_trace = b.trace().re;
                hierarchy_residual = step_hierarchy_residual(&b, &self.layout)?;
            }
        }
        let expected_trace = self.input_dim() as f64;
        let scale = expected_trace.max(1.0);
        let pass = min_eig >= -1e-10 * scale
            && (det_sum_trace - expected_trace).abs() <= 1e-8 * scale
            && hierarchy_residual <= 1e-8 * scale;
        Ok(InstrumentReport {
            min_element_eigenvalue: min_eig,
            det_sum_trace,
            expected_trace,
            hierarchy_residual,
            pass,
        })
    }
}

/// Residual of the deterministic trace condition on one slot: tracing the
/// output legs must leave the identity on the input legs.
fn step_hierarchy_residual(det: &ComplexMatrix, layout: &LegLayout) -> Result<f64> {
    let outs: Vec<_> = layout.ids().into_iter().filter(|id| id.role == LegRole::Out).collect();
    let (reduced, rl) = crate::legs::partial_trace(det, layout, &outs)?;
    if rl.is_empty() {
        return Ok((reduced.get(0, 0) - ONE).norm());
    }
    Ok((&reduced - &ComplexMatrix::identity(rl.dim())).max_abs())
}

fn slot_layout(t: i32, d: usize) -> LegLayout {
    LegLayout::new(vec![Leg::new(t, LegRole::In, d), Leg::new(t, LegRole::Out, d)]).unwrap()
}

/// Do-nothing instrument: one outcome per step, element psi_plus per slot.
pub fn identity_instrument(timesteps: &[i32], d: usize) -> Result<Instrument> {
    let steps = timesteps
        .iter()
        .map(|&t| StepElements::new(t, slot_layout(t, d), vec!["id".into()], vec![psi_plus(d)]))
        .collect::<Result<Vec<_>>>()?;
    Instrument::product("identity", steps)
}

/// Completely noisy instrument: discard and reprepare maximally mixed.
pub fn noisy_instrument(timesteps: &[i32], d: usize) -> Result<Instrument> {
    let steps = timesteps
        .iter()
        .map(|&t| {
            StepElements::new(
                t,
                slot_layout(t, d),
                vec!["noise".into()],
                vec![ComplexMatrix::identity(d * d).scale_re(1.0 / d as f64)],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::product("noisy", steps)
}

/// Symmetric informationally complete qubit POVM on tetrahedral axes.
pub fn tetrahedral_povm() -> Vec<ComplexMatrix> {
    let axes: [[f64; 3]; 4] =
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let paulis = [qubit::sigma_x(), qubit::sigma_y(), qubit::sigma_z()];
    axes.iter()
        .map(|a| {
            let mut m = ComplexMatrix::identity(2);
            for (ai, p) in a.iter().zip(paulis.iter()) {
                m = &m + &p.scale_re(ai / 3.0f64.sqrt());
            }
            m.scale_re(0.25)
        })
        .collect()
}

/// The repreparation set used by the causal break.
pub fn causal_break_repreparations() -> Vec<ComplexMatrix> {
    vec![
        qubit::projector(&qubit::ket0()),
        qubit::projector(&qubit::ket1()),
        qubit::projector(&qubit::ket_plus_x()),
        qubit::projector(&qubit::ket_plus_y()),
    ]
}

/// One causal-break slot: tetrahedral POVM followed by an independent uniform
/// repreparation; 16 joint outcomes with the 1/4 repreparation probability
/// folded into the elements.
pub fn causal_break_step(t: i32) -> Result<StepElements> {
    let povm = tetrahedral_povm();
    let repreps = causal_break_repreparations();
    let mut labels = Vec::new();
    let mut elements = Vec::new();
    for (xm, pi) in povm.iter().enumerate() {
        for (xr, rho) in repreps.iter().enumerate() {
            labels.push(format!("m{xm}r{xr}"));
            elements.push(pi.transpose().kron(&rho.scale_re(0.25)));
        }
    }
    StepElements::new(t, slot_layout(t, 2), labels, elements)
}

/// Informationally complete measure-and-reprepare instrument over a block of
/// timesteps; 16^l outcomes.
pub fn causal_break_instrument(timesteps: &[i32]) -> Result<Instrument> {
    let steps =
        timesteps.iter().map(|&t| causal_break_step(t)).collect::<Result<Vec<_>>>()?;
    Instrument::product("causal-break", steps)
}

/// Choi of conjugation by a unitary, input leg first.
pub fn unitary_choi(u: &ComplexMatrix) -> ComplexMatrix {
    let d = u.dim();
    let mut c = ComplexMatrix::zeros(d * d);
    for k in 0..d {
        for l in 0..d {
            for o in 0..d {
                for o2 in 0..d {
                    c.add_at(k * d + o, l * d + o2, u.get(o, k) * u.get(o2, l).conj());
                }
            }
        }
    }
    c
}

/// Single-outcome unitary instrument applied at each listed timestep.
pub fn unitary_instrument(u: &ComplexMatrix, timesteps: &[i32]) -> Result<Instrument> {
    let residual = (&u.dagger().matmul(u) - &ComplexMatrix::identity(u.dim())).max_abs();
    if residual > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "matrix is not unitary: residual {residual:.3e}"
        )));
    }
    let choi = unitary_choi(u);
    let steps = timesteps
        .iter()
        .map(|&t| {
            StepElements::new(t, slot_layout(t, u.dim()), vec!["u".into()], vec![choi.clone()])
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::product("unitary", steps)
}

/// Discard the input and prepare sigma: Choi = 1_in ⊗ sigma.
pub fn trash_and_prepare(sigma: &ComplexMatrix, t: i32) -> Result<Instrument> {
    let d = sigma.dim();
    if !sigma.is_hermitian(1e-10) || (sigma.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("prepared state must be a normalized state".into()));
    }
    let element = ComplexMatrix::identity(d).kron(sigma);
    let step = StepElements::new(t, slot_layout(t, d), vec!["tp".into()], vec![element])?;
    Instrument::product("trash-and-prepare", vec![step])
}

/// Dual operators to an instrument's elements under the trace pairing
/// tr[D^T O] = delta.
pub struct DualFrame {
    layout: LegLayout,
    body: DualBody,
}

enum DualBody {
    Explicit(Vec<ComplexMatrix>),
    Product(Vec<Vec<ComplexMatrix>>),
}

impl DualFrame {
    pub fn layout(&self) -> &LegLayout {
        &self.layout
    }

    pub fn dual(&self, inst: &Instrument, idx: usize) -> ComplexMatrix {
        match &self.body {
            DualBody::Explicit(d) => d[idx].clone(),
            DualBody::Product(step_duals) => {
                let parts = inst.step_indices(idx);
                let mut m: Option<ComplexMatrix> = None;
                for (j, duals) in step_duals.iter().enumerate() {
                    let e = &duals[parts[j]];
                    m = Some(match m {
                        None => e.clone(),
                        Some(prev) => prev.kron(e),
                    });
                }
                m.unwrap()
            }
        }
    }

    pub fn step_duals(&self) -> Option<&[Vec<ComplexMatrix>]> {
        match &self.body {
            DualBody::Product(s) => Some(s),
            DualBody::Explicit(_) => None,
        }
    }

    pub fn explicit_duals(&self) -> Option<&[ComplexMatrix]> {
        match &self.body {
            DualBody::Explicit(d) => Some(d),
            DualBody::Product(_) => None,
        }
    }
}

/// Duals of a list of elements by Gram inversion on their span.
fn duals_of(elements: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let n = elements.len();
    let mut gram = ComplexMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            gram.set(a, b, elements[a].transpose().contract_t(&elements[b]));
        }
    }
    let (gram_h, _) = gram.hermitize();
    let eig = eig_hermitian(&gram_h)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    if eig.values.iter().any(|&v| v <= 1e-10 * max.max(1e-300)) {
        return Err(Error::SingularGram);
    }
    // G^{-1} columns give the dual coefficients.
    let mut duals = Vec::with_capacity(n);
    for x in 0..n {
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        rhs[x] = ONE;
        // G^{-1} e_x via the eigendecomposition.
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let vk = eig.eigenvector(k);
            let proj: C64 = vk.iter().zip(rhs.iter()).map(|(v, r)| v.conj() * r).sum();
            let w = proj / eig.values[k];
            for (c, vi) in coeffs.iter_mut().zip(vk.iter()) {
                *c += w * vi;
            }
        }
        let mut d = ComplexMatrix::zeros(elements[0].dim());
        for (xp, e) in elements.iter().enumerate() {
            d = &d + &e.scale(coeffs[xp]);
        }
        duals.push(d);
    }
    Ok(duals)
}

/// Dual frame of an instrument; per-step for product instruments so large
/// outcome sets stay implicit.
pub fn dual_frame(inst: &Instrument) -> Result<DualFrame> {
    match inst.steps() {
        Some(steps) => {
            let mut all = Vec::with_capacity(steps.len());
            for s in steps {
                all.push(duals_of(&s.elements)?);
            }
            Ok(DualFrame { layout: inst.layout().clone(), body: DualBody::Product(all) })
        }
        None => {
            let elements: Vec<ComplexMatrix> =
                (0..inst.n_outcomes()).map(|x| inst.element(x)).collect();
            Ok(DualFrame {
                layout: inst.layout().clone(),
                body: DualBody::Explicit(duals_of(&elements)?),
            })
        }
    }
}

/// Expansion coefficients of an operator in the span of a set of elements,
/// with the residual of the reconstruction.
pub fn span_coefficients(
    elements: &[ComplexMatrix],
    duals: &[ComplexMatrix],
    op: &ComplexMatrix,
) -> (Vec<C64>, f64) {
    let coeffs: Vec<C64> =
        duals.iter().map(|d| d.transpose().contract_t(op)).collect();
    let mut rec = ComplexMatrix::zeros(op.dim());
    for (c, e) in coeffs.iter().zip(elements.iter()) {
        rec = &rec + &e.scale(*c);
    }
    let residual = (&rec - op).max_abs();
    (coeffs, residual)
}
