use std::fmt;

/// How many previous search directions each step A-orthogonalizes against.
///
/// A valid sequence satisfies `0 <= m_k <= k` and `m_{k+1} <= m_k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemoryPolicy {
    /// `m_k = k`: orthogonalize against every previous direction.
    Full,
    /// `m_k = min(k, m)`. `Truncated(1)` is PCG.
    Truncated(usize),
    /// `m_k = 0`: preconditioned steepest descent.
    Psd,
    /// Explicit `m_0, m_1, ...`; past the end the last entry is repeated,
    /// capped at `k`.
    Explicit(Vec<usize>),
}

impl MemoryPolicy {
    pub fn pcg() -> Self {
        MemoryPolicy::Truncated(1)
    }

    pub fn m(&self, k: usize) -> usize {
        match self {
            MemoryPolicy::Full => k,
            MemoryPolicy::Truncated(m) => k.min(*m),
            MemoryPolicy::Psd => 0,
            MemoryPolicy::Explicit(seq) => match seq.get(k) {
                Some(&m) => m,
                None => seq.last().copied().unwrap_or(0).min(k),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            MemoryPolicy::Full => "full".into(),
            MemoryPolicy::Truncated(1) => "pcg".into(),
            MemoryPolicy::Truncated(m) => format!("truncated{m}"),
            MemoryPolicy::Psd => "psd".into(),
            MemoryPolicy::Explicit(_) => "explicit".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyViolation {
    pub k: usize,
    pub m_k: usize,
    pub previous: Option<usize>,
}

impl fmt::Display for PolicyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "memory policy violated at k = {}: m_k = {}", self.k, self.m_k)?;
        if self.m_k > self.k {
            write!(f, " > k")?;
        }
        if let Some(prev) = self.previous {
            if self.m_k > prev + 1 {
                write!(f, " > m_(k-1) + 1 = {}", prev + 1)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for PolicyViolation {}

/// Checks both constraints for `k < horizon` and reports the first violation.
pub fn validate_policy(policy: &MemoryPolicy, horizon: usize) -> Result<(), PolicyViolation> {
    let mut previous: Option<usize> = None;
    for k in 0..horizon {
        let m_k = policy.m(k);
        let grows_too_fast = previous.is_some_and(|p| m_k > p + 1);
        if m_k > k || grows_too_fast {
            return Err(PolicyViolation { k, m_k, previous });
        }
        previous = Some(m_k);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_policies_are_valid() {
        assert!(validate_policy(&MemoryPolicy::Full, 100).is_ok());
        assert!(validate_policy(&MemoryPolicy::pcg(), 100).is_ok());
        assert!(validate_policy(&MemoryPolicy::Psd, 100).is_ok());
        assert_eq!(MemoryPolicy::pcg().m(0), 0);
        assert_eq!(MemoryPolicy::pcg().m(5), 1);
    }

    #[test]
    fn jump_is_reported_at_first_index() {
        let v = validate_policy(&MemoryPolicy::Explicit(vec![0, 2, 3]), 3).unwrap_err();
        assert_eq!(v.k, 1);
        assert_eq!(v.m_k, 2);
        let msg = v.to_string();
        assert!(msg.contains("> k") && msg.contains("m_(k-1) + 1"));
    }

    #[test]
    fn explicit_must_start_at_zero() {
        assert_eq!(validate_policy(&MemoryPolicy::Explicit(vec![1]), 1).unwrap_err().k, 0);
    }

    proptest! {
        #[test]
        fn valid_sequences_pass(steps in proptest::collection::vec(0usize..4, 1..40)) {
            // build m_{k+1} = min(m_k + 1, k + 1) - drop, which is always admissible
            let mut seq = vec![0usize];
            for (k, d) in steps.iter().enumerate() {
                let prev = seq[k];
                seq.push((prev + 1).saturating_sub(*d).min(k + 1));
            }
            let n = seq.len();
            prop_assert!(validate_policy(&MemoryPolicy::Explicit(seq), n + 5).is_ok());
        }
    }
}
