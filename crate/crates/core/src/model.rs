//! Multilayer perceptron used as the trial wave function.
//!
//! Hidden layers use ReLU, the output layer is linear so amplitudes may be
//! negative. Weights are stored `out x in`.

use std::io::{BufRead, Write};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &str = "VQS1";

/// Named network shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// One hidden layer of width 1000.
    Box,
    /// Hidden layers of width 500 and 100.
    Perturbed,
}

impl Architecture {
    pub fn layer_dims(self) -> Vec<usize> {
        match self {
            Architecture::Box => vec![1, 1000, 1],
            Architecture::Perturbed => vec![1, 500, 100, 1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Box => "box",
            Architecture::Perturbed => "perturbed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array2<f64>>,
    seed: u64,
}

/// Parameter leaves of one forward pass, in layer order.
#[derive(Debug)]
pub struct ParamVars<'t> {
    pub weights: Vec<Var<'t>>,
    pub biases: Vec<Var<'t>>,
}

impl MlpParams {
    /// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || {
                rng.random_range(-bound..=bound)
            }));
            biases.push(Array2::from_shape_simple_fn((1, fan_out), || {
                rng.random_range(-bound..=bound)
            }));
        }
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            biases,
            seed,
        })
    }

    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array2<f64>>,
        seed: u64,
    ) -> Result<Self> {
        validate_dims(&dims)?;
        if weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::Config("layer count does not match dims".into()));
        }
        for (l, pair) in dims.windows(2).enumerate() {
            if weights[l].dim() != (pair[1], pair[0]) || biases[l].dim() != (1, pair[1]) {
                return Err(Error::Config(format!("layer {l} has the wrong shape")));
            }
        }
        Ok(Self {
            dims,
            weights,
            biases,
            seed,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array2<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.biases
    }

    /// All weight tensors followed by all bias tensors.
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>()
            + self.biases.iter().map(Array2::len).sum::<usize>()
    }

    /// Network outputs at `xs` without recording a graph.
    pub fn forward_batch(&self, xs: &[f64]) -> Vec<f64> {
        let mut h = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("column");
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = Array2::zeros((h.nrows(), w.nrows()));
            z += b;
            if w.ncols() == 1 {
                for (mut row, &x) in z.rows_mut().into_iter().zip(h.column(0).iter()) {
                    row.scaled_add(x, &w.column(0));
                }
            } else {
                ndarray::linalg::general_mat_mul(1.0, &h, &w.t(), 1.0, &mut z);
            }
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            h = z;
        }
        h.into_raw_vec_and_offset().0
    }

    /// Graph-recording forward pass. Returns the `G x 1` output node and the
    /// parameter leaves so their gradients can be read back.
    pub fn forward_var<'t>(&self, tape: &'t Tape, xs: &[f64]) -> Result<(Var<'t>, ParamVars<'t>)> {
        let input = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("column");
        let mut h = tape.constant(input);
        let mut vars = ParamVars {
            weights: Vec::with_capacity(self.weights.len()),
            biases: Vec::with_capacity(self.biases.len()),
        };
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wv = tape.variable(w.clone());
            let bv = tape.variable(b.clone());
            vars.weights.push(wv);
            vars.biases.push(bv);
            let z = h.affine(wv, bv)?;
            h = if l < last { z.relu() } else { z };
        }
        Ok((h, vars))
    }

    /// Binary checkpoint: a text header line
    /// `VQS1 <num_layers> <d0,d1,...> <seed>` followed by, per layer, the
    /// row-major weights then the biases as little-endian `f64`.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        let dims = self
            .dims
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{CHECKPOINT_MAGIC} {} {dims} {}", self.num_layers(), self.seed)?;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.iter().chain(b.iter()) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad = |msg: &str| Error::Checkpoint(format!("{msg} in header {:?}", header.trim_end()));
        if fields.len() != 4 || fields[0] != CHECKPOINT_MAGIC {
            return Err(bad("unrecognised format"));
        }
        let layers: usize = fields[1].parse().map_err(|_| bad("bad layer count"))?;
        let dims = fields[2]
            .split(',')
            .map(str::parse)
            .collect::<std::result::Result<Vec<usize>, _>>()
            .map_err(|_| bad("bad dims"))?;
        let seed: u64 = fields[3].parse().map_err(|_| bad("bad seed"))?;
        if dims.len() != layers + 1 {
            return Err(bad("layer count disagrees with dims"));
        }
        validate_dims(&dims).map_err(|e| Error::Checkpoint(e.to_string()))?;

        let mut read_block = |rows: usize, cols: usize| -> Result<Array2<f64>> {
            let mut buf = vec![0u8; rows * cols * 8];
            input
                .read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint("truncated payload".into()))?;
            let data = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            Ok(Array2::from_shape_vec((rows, cols), data).expect("block shape"))
        };
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for pair in dims.windows(2) {
            weights.push(read_block(pair[1], pair[0])?);
            biases.push(read_block(1, pair[1])?);
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
        }
        Self::from_parts(dims, weights, biases, seed)
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Config("a network needs at least an input and an output layer".into()));
    }
    if dims[0] != 1 || dims[dims.len() - 1] != 1 {
        return Err(Error::Config(format!(
            "network must map a scalar to a scalar, got dims {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Config(format!("zero-width layer in {dims:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_parameters() {
        let a = MlpParams::init(&[1, 50, 20, 1], 7).unwrap();
        let b = MlpParams::init(&[1, 50, 20, 1], 7).unwrap();
        let c = MlpParams::init(&[1, 50, 20, 1], 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn parameter_counts() {
        let boxed = MlpParams::init(&Architecture::Box.layer_dims(), 0).unwrap();
        assert_eq!(boxed.parameter_count(), 3001);
        let pert = MlpParams::init(&Architecture::Perturbed.layer_dims(), 0).unwrap();
        assert_eq!(pert.parameter_count(), 500 + 500 + 500 * 100 + 100 + 100 + 1);
        assert_eq!(pert.parameter_count(), 51_201);
    }

    #[test]
    fn init_within_fan_in_bounds() {
        let p = MlpParams::init(&[1, 30, 16, 1], 3).unwrap();
        for (w, b) in p.weights().iter().zip(p.biases()) {
            let bound = 1.0 / (w.ncols() as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound));
            assert!(b.iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn rejects_bad_dims() {
        for dims in [vec![1], vec![2, 5, 1], vec![1, 5, 3], vec![1, 0, 1]] {
            assert!(matches!(MlpParams::init(&dims, 0), Err(Error::Config(_))), "{dims:?}");
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut p = MlpParams::init(&[1, 8, 1], 1).unwrap();
        for w in p.weights_mut() {
            w.fill(0.0);
        }
        for b in p.biases_mut() {
            b.fill(0.0);
        }
        assert!(p.forward_batch(&[0.1, 0.5, 0.9]).iter().all(|&v| v == 0.0));
    }

    fn with_random_biases(seed: u64) -> MlpParams {
        let mut p = MlpParams::init(&[1, 40, 12, 1], seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        for b in p.biases_mut() {
            b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        p
    }

    #[test]
    fn output_is_piecewise_linear() {
        let p = with_random_biases(5);
        let g = 4000;
        let xs: Vec<f64> = (0..g).map(|i| i as f64 / g as f64).collect();
        let y = p.forward_batch(&xs);
        let second: Vec<f64> = y.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        let flat = second.iter().filter(|d| d.abs() < 1e-12).count();
        // Only grid cells containing a kink have a non-zero second difference.
        assert!(flat as f64 >= 0.97 * second.len() as f64, "{flat} of {}", second.len());
    }

    #[test]
    fn scaling_output_layer_scales_output() {
        let p = with_random_biases(9);
        let xs = [0.05, 0.3, 0.55, 0.8];
        let base = p.forward_batch(&xs);
        let mut q = p.clone();
        let last = q.num_layers() - 1;
        q.weights_mut()[last].mapv_inplace(|v| 2.0 * v);
        q.biases_mut()[last].mapv_inplace(|v| 2.0 * v);
        for (a, b) in base.iter().zip(q.forward_batch(&xs)) {
            assert!((2.0 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn graph_forward_matches_plain() {
        let p = with_random_biases(2);
        let xs: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let tape = Tape::new();
        let (out, vars) = p.forward_var(&tape, &xs).unwrap();
        assert_eq!(vars.weights.len(), 3);
        let v = out.value();
        for (i, y) in p.forward_batch(&xs).into_iter().enumerate() {
            assert_eq!(v[[i, 0]], y);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = with_random_biases(4);
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        assert!(buf.starts_with(b"VQS1 3 1,40,12,1 4\n"));
        let header_len = buf.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(buf.len() - header_len, p.parameter_count() * 8);
        let q = MlpParams::read_checkpoint(&buf[..]).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let p = MlpParams::init(&[1, 4, 1], 0).unwrap();
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        assert!(MlpParams::read_checkpoint(&buf[..buf.len() - 3]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(MlpParams::read_checkpoint(&extra[..]).is_err());
        assert!(MlpParams::read_checkpoint(&b"VQS2 2 1,4,1 0\n"[..]).is_err());
        assert!(MlpParams::read_checkpoint(&b"VQS1 3 1,4,1 0\n"[..]).is_err());
    }
}
