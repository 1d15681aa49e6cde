use std::collections::BTreeSet;

use super::schedule::TenderSchedule;
use super::AnalysisError;

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`. Both vectors must be nonzero.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, AnalysisError> {
    if u.len() != v.len() {
        return Err(AnalysisError::LengthMismatch { left: u.len(), right: v.len() });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    if u == v {
        return Ok(1.0);
    }
    Ok((dot / (nu * nv).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise similarity matrix; entries for zero vectors are `None`.
pub fn similarity_matrix(vectors: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    vectors.iter().map(|u| vectors.iter().map(|v| cosine_similarity(u, v).ok()).collect()).collect()
}

/// Cosine similarity of two schedules' 0/1 vectors, taken over the union of
/// their tenders. Windows absent from both only add zeros, so no instance
/// is needed.
pub fn schedule_similarity(a: &TenderSchedule, b: &TenderSchedule) -> Result<f64, AnalysisError> {
    let keys: BTreeSet<(&str, usize, usize)> = a.iter().chain(b.iter()).collect();
    let indicator = |s: &TenderSchedule| {
        let own: BTreeSet<_> = s.iter().collect();
        keys.iter().map(|k| if own.contains(k) { 1.0 } else { 0.0 }).collect::<Vec<f64>>()
    };
    cosine_similarity(&indicator(a), &indicator(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_orthogonal_diagonal() {
        assert_eq!(cosine_similarity(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_and_mismatch_rejected() {
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(AnalysisError::ZeroVector)));
        assert!(matches!(cosine_similarity(&[1.0], &[1.0, 0.0]), Err(AnalysisError::LengthMismatch { .. })));
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let m = similarity_matrix(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(m[0][0], Some(1.0));
        assert_eq!(m[0][1], m[1][0]);
        assert_eq!(m[2][0], None);
    }

    #[test]
    fn schedules_compared_over_union() {
        let mk = |v: Vec<(usize, usize)>| TenderSchedule {
            instance: "x".into(),
            tenders: [("A".to_string(), v)].into_iter().collect(),
        };
        let a = mk(vec![(1, 5), (6, 10)]);
        assert_eq!(schedule_similarity(&a, &a).unwrap(), 1.0);
        let c = schedule_similarity(&a, &mk(vec![(1, 5), (6, 9)])).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        assert!(schedule_similarity(&a, &mk(vec![])).is_err());
    }
}
