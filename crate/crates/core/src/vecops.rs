//! Pure numerical kernel for the scoring methods: inner product, norms,
//! orthogonal projection onto the hyperplane perpendicular to the modifier
//! vector, cosine similarity, and the translational distance.

use crate::embedding::EmbeddingVector;

/// Euclidean-norm threshold below which a vector is treated as degenerate.
pub const DEGENERACY_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("modifier vector is degenerate (norm below {DEGENERACY_EPSILON:e})")]
    DegenerateModifier,
    #[error("vector is degenerate (norm below {DEGENERACY_EPSILON:e})")]
    DegenerateVector,
    #[error("candidate has no occupation vector (required in residual mode)")]
    MissingOccupationVector,
}

fn check_dims(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<(), VectorError> {
    if x.dim() != y.dim() {
        return Err(VectorError::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(())
}

/// Inner product Σᵢ xᵢyᵢ.
pub fn dot(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(x, y)?;
    let mut acc = 0.0f64;
    for (a, b) in x.values().iter().zip(y.values()) {
        acc += a * b;
    }
    Ok(acc)
}

/// Σᵢ |xᵢ|, the distance-from-origin measure used for extremality.
pub fn l1_norm(x: &EmbeddingVector) -> f64 {
    x.values().iter().map(|v| v.abs()).sum()
}

/// Euclidean norm.
pub fn l2_norm(x: &EmbeddingVector) -> f64 {
    x.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Remove from `x` its component along `c`:
/// `x − ((x∘c)/(c∘c))·c`, the projection onto the hyperplane
/// perpendicular to `c`.
pub fn project_orthogonal(
    x: &EmbeddingVector,
    c: &EmbeddingVector,
) -> Result<EmbeddingVector, VectorError> {
    check_dims(x, c)?;
    if l2_norm(c) <= DEGENERACY_EPSILON {
        return Err(VectorError::DegenerateModifier);
    }
    let coeff = dot(x, c)? / dot(c, c)?;
    let values = x
        .values()
        .iter()
        .zip(c.values())
        .map(|(xi, ci)| xi - coeff * ci)
        .collect();
    Ok(EmbeddingVector::from_computed(values))
}

/// Cosine similarity `(x∘y)/(‖x‖‖y‖)`, clamped to [−1, 1] so that
/// downstream sorting stays total under rounding.
pub fn cosine(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(x, y)?;
    let nx = l2_norm(x);
    let ny = l2_norm(y);
    if nx <= DEGENERACY_EPSILON || ny <= DEGENERACY_EPSILON {
        return Err(VectorError::DegenerateVector);
    }
    Ok((dot(x, y)? / (nx * ny)).clamp(-1.0, 1.0))
}

/// How the translational method turns `x⃗ + c⃗ ≈ y⃗` into a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranslationalMode {
    /// Compare entity-minus-own-field residuals: `cos(a − c, b − occ_b)`.
    Residual,
    /// Compare the entities directly: `cos(a, b)`.
    Plain,
}

pub(crate) fn subtract(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<EmbeddingVector, VectorError> {
    check_dims(x, y)?;
    Ok(EmbeddingVector::from_computed(
        x.values().iter().zip(y.values()).map(|(a, b)| a - b).collect(),
    ))
}

/// Translational score of candidate `b` for target `a` under modifier `c`.
/// Higher is better in both modes.
pub fn translational_distance(
    a: &EmbeddingVector,
    c: &EmbeddingVector,
    b: &EmbeddingVector,
    occ_b: Option<&EmbeddingVector>,
    mode: TranslationalMode,
) -> Result<f64, VectorError> {
    check_dims(a, c)?;
    check_dims(a, b)?;
    match mode {
        TranslationalMode::Plain => cosine(a, b),
        TranslationalMode::Residual => {
            let occ_b = occ_b.ok_or(VectorError::MissingOccupationVector)?;
            check_dims(b, occ_b)?;
            let residual_a = subtract(a, c)?;
            let residual_b = subtract(b, occ_b)?;
            cosine(&residual_a, &residual_b)
        }
    }
}
