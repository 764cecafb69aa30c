use super::AnalyzerError;
use crate::sequence::{Entry, SequenceSpec};

/// `M_{m,Phi,Psi}` has the same summands as `M_{nu,Xi,Theta}`:
/// `xi_n = c_n phi_n`, `theta_n = d_n psi_n` and `m_n = nu_n c_n d_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RescalingWitness {
    pub nu: SequenceSpec,
    pub xi: SequenceSpec,
    pub theta: SequenceSpec,
}

impl RescalingWitness {
    /// The witness for `M_{m,Psi,Phi}`.
    pub fn swapped(&self) -> RescalingWitness {
        RescalingWitness { nu: self.nu.clone(), xi: self.theta.clone(), theta: self.xi.clone() }
    }
}

fn entries(s: &SequenceSpec) -> Vec<&Entry> {
    s.prelude.iter().chain(s.groups.iter().flat_map(|g| g.entries.iter())).collect()
}

/// Exact check of the rescaling relation entry by entry. Equivalent to
/// `m phi psi = nu xi theta` with matching indices, since no weight vanishes.
pub fn check_rescaling_witness(
    m: &SequenceSpec,
    phi: &SequenceSpec,
    psi: &SequenceSpec,
    w: &RescalingWitness,
) -> Result<bool, AnalyzerError> {
    for s in [psi, m, &w.nu, &w.xi, &w.theta] {
        if !phi.is_aligned(s) {
            return Err(AnalyzerError::ShapeMismatch(format!("{} and {}", phi.name, s.name)));
        }
    }
    let (m, phi, psi, nu, xi, theta) = (entries(m), entries(phi), entries(psi), entries(&w.nu), entries(&w.xi), entries(&w.theta));
    for i in 0..phi.len() {
        if xi[i].index != phi[i].index || theta[i].index != psi[i].index {
            return Ok(false);
        }
        let lhs = m[i].weight.mul(&phi[i].weight).mul(&psi[i].weight);
        let rhs = nu[i].weight.mul(&xi[i].weight).mul(&theta[i].weight);
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}
