//! Small synthetic complex classification problems for smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ComplexDataset, Split, TestSource};
use crate::cnum::C64;

fn sample(rng: &mut ChaCha8Rng, dim: usize, n: usize, label: impl Fn(&[C64]) -> Option<usize>) -> Split {
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let x: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
        if let Some(y) = label(&x) {
            features.extend(x);
            labels.push(y);
        }
    }
    Split::new(features, labels, dim).expect("consistent shapes")
}

fn dataset(name: &str, dim: usize, sizes: [usize; 3], seed: u64, label: impl Fn(&[C64]) -> Option<usize>) -> ComplexDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [train, val, test] = sizes.map(|n| sample(&mut rng, dim, n, &label));
    ComplexDataset {
        name: name.to_string(),
        rows: 0,
        cols: 0,
        classes: 2,
        selected: Vec::new(),
        mean: Vec::new(),
        scale: Vec::new(),
        seed,
        test_source: TestSource::Synthetic,
        train_index: (0..sizes[0]).collect(),
        val_index: (0..sizes[1]).collect(),
        test_index: (0..sizes[2]).collect(),
        train,
        val,
        test,
    }
}

/// Two classes split by the hyperplane `Re(x₁) + Im(x₂) = 0` with a margin of 0.2; `F = 2`.
pub fn linear_separable(n_train: usize, n_val: usize, n_test: usize, seed: u64) -> ComplexDataset {
    dataset("toy-linear", 2, [n_train, n_val, n_test], seed, |x| {
        let s = x[0].re + x[1].im;
        (s.abs() > 0.2).then_some(usize::from(s > 0.0))
    })
}

/// Quadrant XOR on the first feature (`Re z > 0` xor `Im z > 0`) plus a
/// distractor feature; points within 0.1 of an axis are discarded; `F = 2`.
pub fn xor_like(n_train: usize, n_val: usize, n_test: usize, seed: u64) -> ComplexDataset {
    dataset("toy-xor", 2, [n_train, n_val, n_test], seed, |x| {
        let z = x[0];
        (z.re.abs() > 0.1 && z.im.abs() > 0.1).then_some(usize::from((z.re > 0.0) != (z.im > 0.0)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_labels_and_determinism() {
        let ds = xor_like(100, 20, 30, 4);
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (100, 20, 30));
        assert!(ds.train.labels.iter().all(|&y| y < 2));
        assert!(ds.train.labels.contains(&0) && ds.train.labels.contains(&1));
        assert_eq!(ds, xor_like(100, 20, 30, 4));
        for i in 0..ds.train.len() {
            let z = ds.train.row(i)[0];
            assert_eq!(ds.train.labels[i], usize::from((z.re > 0.0) != (z.im > 0.0)));
        }
        let lin = linear_separable(50, 5, 5, 0);
        assert!((0..50).all(|i| (lin.train.row(i)[0].re + lin.train.row(i)[1].im).abs() > 0.2));
    }
}
