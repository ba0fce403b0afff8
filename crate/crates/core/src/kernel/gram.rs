use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{pam_constant, pam_sum, windows_of, KernelParams};
use crate::error::{Error, Result};
use crate::seqdata::LabeledDataset;

pub const DEFAULT_TILE: usize = 32;

/// Gram matrix of the position-aware motif kernel over a dataset.
pub fn gram(ds: &LabeledDataset, params: &KernelParams) -> Result<DMatrix<f64>> {
    gram_tiled(ds, params, DEFAULT_TILE)
}

/// Computes the upper triangle tile by tile (tiles in parallel) and mirrors it.
pub fn gram_tiled(ds: &LabeledDataset, params: &KernelParams, tile: usize) -> Result<DMatrix<f64>> {
    let tile = tile.max(1);
    let n = ds.len();
    let windows = ds
        .sequences
        .iter()
        .map(|s| windows_of(s, params.k))
        .collect::<Result<Vec<_>>>()?;
    let c = pam_constant(params);
    let nt = n.div_ceil(tile);
    let tiles: Vec<(usize, usize)> = (0..nt)
        .flat_map(|bi| (bi..nt).map(move |bj| (bi, bj)))
        .collect();
    let blocks: Vec<Vec<(usize, usize, f64)>> = tiles
        .par_iter()
        .map(|&(bi, bj)| {
            let mut out = Vec::new();
            for i in bi * tile..((bi + 1) * tile).min(n) {
                let j0 = if bi == bj { i } else { bj * tile };
                for j in j0..((bj + 1) * tile).min(n) {
                    out.push((i, j, c * pam_sum(&windows[i], &windows[j], params)));
                }
            }
            out
        })
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (i, j, v) in blocks.into_iter().flatten() {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    Ok(g)
}

/// Row-major CSV with a leading `n=<N>` line.
pub fn write_gram_csv(g: &DMatrix<f64>) -> String {
    let mut out = format!("n={}\n", g.nrows());
    for i in 0..g.nrows() {
        let row: Vec<String> = (0..g.ncols()).map(|j| format!("{}", g[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Precomputed-kernel format understood by LIBSVM-style tools:
/// `<label> 0:<i> 1:<K(i,1)> ... n:<K(i,n)>` with 1-based indices.
pub fn write_gram_svm(g: &DMatrix<f64>, labels: &[Option<usize>]) -> Result<String> {
    if labels.len() != g.nrows() {
        return Err(Error::invalid("label count differs from Gram size"));
    }
    let mut out = String::new();
    for i in 0..g.nrows() {
        out.push_str(&labels[i].map_or_else(|| "0".to_string(), |l| l.to_string()));
        out.push_str(&format!(" 0:{}", i + 1));
        for j in 0..g.ncols() {
            out.push_str(&format!(" {}:{}", j + 1, g[(i, j)]));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::k_pam;
    use crate::rng::seeded;
    use crate::seqdata::{encode_sequence, Alphabet};
    use rand::Rng;

    fn random_dataset(n: usize, seed: u64) -> LabeledDataset {
        let dna = Alphabet::dna();
        let mut rng = seeded(seed, 0);
        let seqs = (0..n)
            .map(|_| {
                let len = rng.random_range(4..=12);
                let s: String = (0..len).map(|_| dna.symbol(rng.random_range(0..4))).collect();
                encode_sequence(&s, &dna).unwrap()
            })
            .collect();
        LabeledDataset::new(dna, seqs, vec![]).unwrap()
    }

    #[test]
    fn single_sequence() {
        let ds = random_dataset(1, 1);
        let p = KernelParams::new(2, 1.0, 10.0, 1.0).unwrap();
        let g = gram(&ds, &p).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert!(g[(0, 0)] > 0.0);
    }

    #[test]
    fn matches_entrywise_and_is_psd() {
        let ds = random_dataset(17, 2);
        let p = KernelParams::new(3, 0.5, 20.0, 2.0).unwrap();
        for tile in [1, 4, 32] {
            let g = gram_tiled(&ds, &p, tile).unwrap();
            for i in 0..ds.len() {
                for j in 0..ds.len() {
                    let v = k_pam(&ds.sequences[i], &ds.sequences[j], &p).unwrap();
                    assert!((g[(i, j)] - v).abs() <= 1e-12 * v.abs().max(1.0));
                    assert_eq!(g[(i, j)], g[(j, i)]);
                }
            }
            let eig = g.clone().symmetric_eigen();
            assert!(eig.eigenvalues.min() >= -1e-8);
        }
    }

    #[test]
    fn export_formats() {
        let ds = random_dataset(3, 3);
        let p = KernelParams::new(2, 1.0, 10.0, 1.0).unwrap();
        let g = gram(&ds, &p).unwrap();
        let csv = write_gram_csv(&g);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n=3"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(rows[i][j], g[(i, j)]);
            }
        }
        let svm = write_gram_svm(&g, &[Some(1), None, Some(0)]).unwrap();
        let first: Vec<&str> = svm.lines().next().unwrap().split(' ').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first[1], "0:1");
        assert!(first[2].starts_with("1:"));
        assert!(svm.lines().nth(2).unwrap().starts_with("0 0:3 "));
    }
}
