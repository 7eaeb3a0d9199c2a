//! Registry of the verification battery: every acceptance check with the
//! statement it pins down. `sevlab checks` prints this list; the
//! integration suite runs it.

pub struct CheckEntry {
    pub id: &'static str,
    pub description: &'static str,
}

pub const CHECKS: &[CheckEntry] = &[
    CheckEntry {
        id: "signature",
        description: "Lemma 2.2 signature: the counterterm block carries exactly m = floor(k/2) \
                      negative squares for z_{k-1} < 0; eigenvalue count equals the Lemma 3.1 \
                      congruence-reduction count",
    },
    CheckEntry {
        id: "intertwining",
        description: "Lemma 3.7 intertwining: lifting the order-n resolvent through Q_n equals \
                      the closed-form resolvent on the Pontryagin space",
    },
    CheckEntry {
        id: "resolvent-identity",
        description: "Lemma 3.10 pseudoresolvent identity R(a) - R(b) = (b - a) R(a) R(b); \
                      operator reconstruction independent of the shift",
    },
    CheckEntry {
        id: "zero-energy",
        description: "Lemma 3.11 zero-shift identification: R(0) matches the componentwise \
                      inverse-operator formulas, and the rank-one closed form for m = 0",
    },
    CheckEntry {
        id: "conservation",
        description: "Lemma 2.4 / H-unitarity: the Schrodinger groups conserve the indefinite \
                      inner products on both the exact and the order-n side",
    },
    CheckEntry {
        id: "theorem1-ladder",
        description: "Theorem 1 ladder: generalized strong convergence of the Schrodinger \
                      evolution operators (negative log-log slope, >= 10x total drop)",
    },
    CheckEntry {
        id: "theorem2-ladder",
        description: "Theorem 2 ladder: generalized strong convergence of the parabolic \
                      semigroups, same thresholds",
    },
    CheckEntry {
        id: "theorem3-ladder",
        description: "Theorem 3 ladder: generalized strong convergence of the cosine families \
                      V_n and W_n separately, same thresholds",
    },
    CheckEntry {
        id: "resolvent-ladder",
        description: "Lemma 3.15 ladder: generalized strong convergence of the resolvents at \
                      admissible shifts; near-singular shifts are skipped and noted",
    },
    CheckEntry {
        id: "m0-reduction",
        description: "k = 1 reduction: the counterterm-system evolution equals direct \
                      integration of the rank-one equation with coupling 1/z_0 to 1e-9",
    },
    CheckEntry {
        id: "projection-consistency",
        description: "Corollary of Lemma 3.6 and Lemma 2.5: Q_n P_n fixes every vector exactly \
                      for odd k; for even k the defect and the inner-product defect drop \
                      monotonically by >= 10x over the ladder",
    },
    CheckEntry {
        id: "hyperbolic-residual",
        description: "Second-order residual: finite-difference second derivative of the evolved \
                      state matches the generator to 1e-5 at step 1e-3; scalar surrogate matches \
                      cos/sin closed forms to 1e-10",
    },
    CheckEntry {
        id: "singular-trend",
        description: "Lemma 3.6 surrogate trend: the k-th negative moment of chi grows without \
                      saturating across ambient dimensions (emulated divergence)",
    },
    CheckEntry {
        id: "determinism",
        description: "Reproducibility: identical config and seed produce byte-identical CSV",
    },
];

pub fn render() -> String {
    let mut out = String::new();
    out.push_str(&format!("{} checks:\n", CHECKS.len()));
    for c in CHECKS {
        out.push_str(&format!("  {:<24} {}\n", c.id, c.description));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contains_required_anchors() {
        let text = render();
        assert!(text.contains("Lemma 3.7 intertwining"));
        assert!(text.contains("Theorem 1 ladder"));
        assert!(CHECKS.len() >= 10);
    }
}
