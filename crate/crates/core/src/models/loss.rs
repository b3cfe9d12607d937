use crate::error::{Error, Result};
use crate::models::kernels::{dloss, row_loss};
use crate::models::ModelSpec;
use crate::storage::DataMatrix;

fn check(spec: &ModelSpec, x: &[f64], m: &DataMatrix) -> Result<()> {
    spec.check_data(m)?;
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Full-data objective: the summed per-row loss plus `lambda/2 ||x||^2`.
pub fn loss(spec: &ModelSpec, x: &[f64], m: &DataMatrix) -> Result<f64> {
    check(spec, x, m)?;
    let z = m.mul_vec(x)?;
    let kind = spec.kind();
    let data: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| row_loss(kind, zi, m.label(i)))
        .sum();
    let lambda = spec.hyper().lambda;
    let reg = if lambda > 0.0 {
        0.5 * lambda * x.iter().map(|v| v * v).sum::<f64>()
    } else {
        0.0
    };
    Ok(data + reg)
}

/// Full-data (sub)gradient. Anchored coordinates are constants and get zero.
pub fn gradient(spec: &ModelSpec, x: &[f64], m: &DataMatrix) -> Result<Vec<f64>> {
    check(spec, x, m)?;
    let z = m.mul_vec(x)?;
    let kind = spec.kind();
    let y: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| dloss(kind, zi, m.label(i)))
        .collect();
    let mut g = m.mul_t_vec(&y)?;
    let lambda = spec.hyper().lambda;
    for (j, gj) in g.iter_mut().enumerate() {
        *gj += lambda * x[j];
        if spec.anchor(j).is_some() {
            *gj = 0.0;
        }
    }
    Ok(g)
}

pub fn grad_norm(spec: &ModelSpec, x: &[f64], m: &DataMatrix) -> Result<f64> {
    Ok(gradient(spec, x, m)?
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_spec, Hyper, TaskKind};

    fn labelled(r: &[Vec<f64>], b: Vec<f64>) -> DataMatrix {
        DataMatrix::from_rows(r).unwrap().with_labels(b).unwrap()
    }

    #[test]
    fn svm_at_origin_is_n() {
        let m = labelled(
            &[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0]],
            vec![1.0, -1.0, 1.0],
        );
        let spec = make_spec(TaskKind::Svm, 2, Hyper::new(1.0)).unwrap();
        assert_eq!(loss(&spec, &[0.0, 0.0], &m).unwrap(), 3.0);
    }

    #[test]
    fn lr_at_origin_is_n_ln2() {
        let m = labelled(&[vec![1.0, 2.0], vec![0.0, 1.0]], vec![1.0, -1.0]);
        let spec = make_spec(TaskKind::Lr, 2, Hyper::new(1.0)).unwrap();
        let l = loss(&spec, &[0.0, 0.0], &m).unwrap();
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ls_exact_solution() {
        let m = labelled(&[vec![2.0, 0.0], vec![0.0, 4.0]], vec![1.0, 2.0]);
        let spec = make_spec(TaskKind::Ls, 2, Hyper::new(1.0)).unwrap();
        assert_eq!(loss(&spec, &[0.5, 0.5], &m).unwrap(), 0.0);
        assert_eq!(grad_norm(&spec, &[0.5, 0.5], &m).unwrap(), 0.0);
    }

    #[test]
    fn ls_one_by_one_gradient() {
        let m = labelled(&[vec![1.0]], vec![1.0]);
        let spec = make_spec(TaskKind::Ls, 1, Hyper::new(1.0)).unwrap();
        assert_eq!(grad_norm(&spec, &[0.0], &m).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = labelled(&[vec![1.0]], vec![1.0]);
        let spec = make_spec(TaskKind::Ls, 2, Hyper::new(1.0)).unwrap();
        assert!(loss(&spec, &[0.0, 0.0], &m).is_err());
        let spec = make_spec(TaskKind::Ls, 1, Hyper::new(1.0)).unwrap();
        assert!(loss(&spec, &[0.0, 0.0], &m).is_err());
    }

    #[test]
    fn lr_is_stable_for_large_margins() {
        let m = labelled(&[vec![1.0]], vec![1.0]);
        let spec = make_spec(TaskKind::Lr, 1, Hyper::new(1.0)).unwrap();
        assert!(loss(&spec, &[1000.0], &m).unwrap() < 1e-300);
        assert!((loss(&spec, &[-1000.0], &m).unwrap() - 1000.0).abs() < 1e-9);
    }
}
