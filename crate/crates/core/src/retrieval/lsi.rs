use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::index::CorpusIndex;
use super::models::{norm, weighted, TfWeighting};
use super::{ranking_from, Ranking, RetrievalError};
use crate::text::TokenStream;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;
const RANK_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric Gram matrix, largest first, truncated to the
/// numerical rank and to at most `dims`.
fn top_eigen(gram: DMatrix<f64>, dims: usize) -> Result<(Vec<f64>, DMatrix<f64>), RetrievalError> {
    let eig = SymmetricEigen::try_new(gram, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(RetrievalError::DecompositionFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let lambda_max = order.first().map_or(0.0, |&i| eig.eigenvalues[i]);
    let kept: Vec<usize> = order
        .into_iter()
        .take_while(|&i| eig.eigenvalues[i] > RANK_TOL * lambda_max && eig.eigenvalues[i] > 0.0)
        .take(dims)
        .collect();
    let values = kept.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), kept.len(), |r, c| {
        eig.eigenvectors[(r, kept[c])]
    });
    Ok((values, vectors))
}

/// Latent semantic indexing over the TF-IDF term-document matrix `W`.
///
/// With `W ~ U_k S_k V_k^T`, document `j` is represented by `S_k V_k^T e_j`
/// and the query by `U_k^T q`; the score is their inner product divided by
/// the norms of the document representation and of the original query.
/// At full rank this equals the plain cosine of the TF-IDF vectors.
pub fn score_lsi(
    query: &TokenStream,
    index: &CorpusIndex,
    dims: usize,
) -> Result<Ranking, RetrievalError> {
    if dims == 0 {
        return Err(RetrievalError::InvalidConfig("lsi_dims must be at least 1"));
    }
    let n = index.n_docs();
    let m = index.n_terms();
    let tf = TfWeighting::LengthNormalized;

    let mut w = DMatrix::<f64>::zeros(m, n);
    for (j, d) in index.docs().iter().enumerate() {
        for (t, v) in weighted(index, &d.concat_tf, d.concat_len(), tf) {
            w[(t as usize, j)] = v;
        }
    }
    let q_sparse = weighted(index, &index.query_freqs(query), query.len(), tf);
    let q_norm = norm(&q_sparse);
    let mut q = DVector::<f64>::zeros(m);
    for &(t, v) in &q_sparse {
        q[t as usize] = v;
    }
    if q_norm == 0.0 || m == 0 {
        return Ok(ranking_from(index, alloc::vec![0.0; n]));
    }

    // docs: k x n latent document matrix; qk: latent query.
    let (docs, qk) = if n <= m {
        let (lambda, v) = top_eigen(w.transpose() * &w, dims)?;
        // S V^T, and U^T q = S^-1 V^T W^T q.
        let mut docs = v.transpose();
        let mut qk = v.transpose() * (w.transpose() * &q);
        for (i, l) in lambda.iter().enumerate() {
            let s = libm::sqrt(*l);
            docs.row_mut(i).scale_mut(s);
            qk[i] /= s;
        }
        (docs, qk)
    } else {
        let (_, u) = top_eigen(&w * w.transpose(), dims)?;
        (u.transpose() * &w, u.transpose() * &q)
    };

    let scores = (0..n)
        .map(|j| {
            let col = docs.column(j);
            let d_norm = col.norm();
            if d_norm == 0.0 {
                0.0
            } else {
                col.dot(&qk) / (d_norm * q_norm)
            }
        })
        .collect();
    Ok(ranking_from(index, scores))
}
