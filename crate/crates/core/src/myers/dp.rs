use crate::seq::PackedSeq;

use super::MyersError;

/// Semi-global edit distance by full dynamic programming: the query must be
/// matched end to end, the candidate may be entered and left anywhere.
/// `C[i][0] = i`, `C[0][j] = 0`, result is the minimum of the last row.
pub fn edit_distance_dp(query: &PackedSeq, candidate: &PackedSeq) -> Result<u32, MyersError> {
    if query.is_empty() || candidate.is_empty() {
        return Err(MyersError::EmptySequence);
    }
    let q: Vec<u8> = query.iter().map(|b| b.code()).collect();
    // column-wise: col[i] = C[i][j]
    let mut col: Vec<u32> = (0..=q.len() as u32).collect();
    let mut best = col[q.len()];
    for s in candidate.iter().map(|b| b.code()) {
        let mut diag = col[0];
        col[0] = 0;
        for i in 1..=q.len() {
            let up = col[i - 1] + 1;
            let left = col[i] + 1;
            let sub = diag + u32::from(q[i - 1] != s);
            diag = col[i];
            col[i] = sub.min(up).min(left);
        }
        best = best.min(col[q.len()]);
    }
    Ok(best)
}
