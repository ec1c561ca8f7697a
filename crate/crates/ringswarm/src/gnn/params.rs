//! Learnable weights of the message-passing network, with flat binary
//! serialization (little-endian f32 values behind a dimension table).

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GnnError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Mat {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect(),
        }
    }
}

/// One-hidden-layer perceptron: `w2 * act(w1 * x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

impl Mlp {
    fn glorot(inp: usize, hidden: usize, out: usize, rng: &mut impl Rng) -> Self {
        Mlp {
            w1: Mat::glorot(hidden, inp, rng),
            b1: vec![0.0; hidden],
            w2: Mat::glorot(out, hidden, rng),
            b2: vec![0.0; out],
        }
    }
}

/// Reference configuration: hidden width 32, 5 message-passing rounds,
/// up to 10 candidate goals per agent.
pub const D_H: usize = 32;
pub const K_ROUNDS: usize = 5;
pub const G_MAX: usize = 10;

/// Trailing entries of each hidden state reserved for slot-independent
/// context; the rest splits into `g_max` equal per-goal channel groups.
pub const GLOBAL_CHANNELS: usize = 2;

/// Hidden-layer width of every slot-shared perceptron.
pub const D_INNER: usize = 16;

/// Fill value for unused candidate slots in the encoder input; beyond the
/// unit square's diameter so padding never looks like a near goal.
pub const PAD_COST: f64 = 2.0;

/// Goal-equivariant message-passing weights. A hidden state is laid out as
/// `g_max` per-goal channel groups followed by `GLOBAL_CHANNELS` globals;
/// every network is applied per goal slot with shared weights (or to the
/// globals alone), so renaming goals permutes the computation exactly and
/// a rule learned for one goal applies to all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub d_h: usize,
    pub k_rounds: usize,
    pub g_max: usize,
    /// (slot cost, own x, own y) -> slot channels.
    pub enc: Mlp,
    /// (own x, own y) -> global channels.
    pub enc_g: Mlp,
    /// (received slot channels, received globals) -> slot message.
    pub msg: Mlp,
    /// received globals -> global message.
    pub msg_g: Mlp,
    /// (own slot, aggregated slot messages, mean of own slot channels, mean
    /// of aggregated slot messages, own globals, aggregated global messages)
    /// -> next slot channels. The pooled means give each slot rule a view of
    /// the agent's alternatives.
    pub upd: Mlp,
    /// (own globals, aggregated global messages, mean of own slot channels,
    /// mean of aggregated slot messages) -> next globals. The slot pools let
    /// globals summarize the agent's own options, which per-slot updates
    /// read back -- cross-slot information flow within one agent.
    pub upd_g: Mlp,
    /// (slot channels, globals) -> scalar score for that slot.
    pub dec: Mlp,
}

impl GnnParams {
    /// Channels per goal slot implied by the hidden width.
    pub fn channels(&self) -> usize {
        (self.d_h - GLOBAL_CHANNELS) / self.g_max
    }

    pub fn init(d_h: usize, k_rounds: usize, g_max: usize, seed: u64) -> Self {
        assert!(
            d_h > GLOBAL_CHANNELS && (d_h - GLOBAL_CHANNELS) % g_max == 0,
            "d_h must be GLOBAL_CHANNELS + a multiple of g_max"
        );
        let c = (d_h - GLOBAL_CHANNELS) / g_max;
        let g = GLOBAL_CHANNELS;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GnnParams {
            d_h,
            k_rounds,
            g_max,
            enc: Mlp::glorot(3, D_INNER, c, &mut rng),
            enc_g: Mlp::glorot(2, D_INNER, g, &mut rng),
            msg: Mlp::glorot(c + g, D_INNER, c, &mut rng),
            msg_g: Mlp::glorot(g, D_INNER, g, &mut rng),
            upd: Mlp::glorot(4 * c + 2 * g, D_INNER, c, &mut rng),
            upd_g: Mlp::glorot(2 * g + 2 * c, D_INNER, g, &mut rng),
            dec: Mlp::glorot(c + g, D_INNER, 1, &mut rng),
        }
    }

    pub fn reference(seed: u64) -> Self {
        GnnParams::init(D_H, K_ROUNDS, G_MAX, seed)
    }

    pub fn zeros(d_h: usize, k_rounds: usize, g_max: usize) -> Self {
        let mut p = GnnParams::init(d_h, k_rounds, g_max, 0);
        for (_, t) in p.tensors_mut() {
            for v in t {
                *v = 0.0;
            }
        }
        p
    }

    fn mlps(&self) -> [(&'static str, &Mlp); 7] {
        [
            ("enc", &self.enc),
            ("enc_g", &self.enc_g),
            ("msg", &self.msg),
            ("msg_g", &self.msg_g),
            ("upd", &self.upd),
            ("upd_g", &self.upd_g),
            ("dec", &self.dec),
        ]
    }

    fn mlps_mut(&mut self) -> [(&'static str, &mut Mlp); 7] {
        [
            ("enc", &mut self.enc),
            ("enc_g", &mut self.enc_g),
            ("msg", &mut self.msg),
            ("msg_g", &mut self.msg_g),
            ("upd", &mut self.upd),
            ("upd_g", &mut self.upd_g),
            ("dec", &mut self.dec),
        ]
    }

    /// All tensors in declaration order, as (name, shape, values).
    pub fn tensors(&self) -> Vec<(String, (usize, usize), &[f64])> {
        let mut out = Vec::with_capacity(28);
        for (name, m) in self.mlps() {
            out.push((format!("{name}.w1"), (m.w1.rows, m.w1.cols), m.w1.data.as_slice()));
            out.push((format!("{name}.b1"), (m.b1.len(), 1), m.b1.as_slice()));
            out.push((format!("{name}.w2"), (m.w2.rows, m.w2.cols), m.w2.data.as_slice()));
            out.push((format!("{name}.b2"), (m.b2.len(), 1), m.b2.as_slice()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(28);
        for (name, m) in self.mlps_mut() {
            out.push((format!("{name}.w1"), m.w1.data.as_mut_slice()));
            out.push((format!("{name}.b1"), m.b1.as_mut_slice()));
            out.push((format!("{name}.w2"), m.w2.data.as_mut_slice()));
            out.push((format!("{name}.b2"), m.b2.as_mut_slice()));
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, _, t)| t.len()).sum()
    }
}

const PARAMS_MAGIC: &[u8; 4] = b"RGNP";
const PARAMS_VERSION: u16 = 1;

/// Write parameters: magic, version, d_h, K, g_max, dimension table, then
/// every value as little-endian f32 in declaration order.
pub fn save_params<W: Write>(params: &GnnParams, mut w: W) -> std::io::Result<()> {
    w.write_all(PARAMS_MAGIC)?;
    w.write_all(&PARAMS_VERSION.to_le_bytes())?;
    w.write_all(&(params.d_h as u16).to_le_bytes())?;
    w.write_all(&(params.k_rounds as u16).to_le_bytes())?;
    w.write_all(&(params.g_max as u16).to_le_bytes())?;
    let tensors = params.tensors();
    w.write_all(&(tensors.len() as u16).to_le_bytes())?;
    for (_, (rows, cols), _) in &tensors {
        w.write_all(&(*rows as u32).to_le_bytes())?;
        w.write_all(&(*cols as u32).to_le_bytes())?;
    }
    for (_, _, data) in &tensors {
        for v in *data {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_params_file(params: &GnnParams, path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    save_params(params, std::io::BufWriter::new(file))
}

pub fn load_params<R: Read>(mut r: R) -> Result<GnnParams, GnnError> {
    fn bad(msg: &str) -> GnnError {
        GnnError::BadParamsFile(msg.into())
    }
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| bad(&e.to_string()))?;
    if buf.len() < 12 || &buf[0..4] != PARAMS_MAGIC {
        return Err(bad("missing magic"));
    }
    let u16_at = |off: usize| u16::from_le_bytes([buf[off], buf[off + 1]]) as usize;
    if u16_at(4) != PARAMS_VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let d_h = u16_at(6);
    let k_rounds = u16_at(8);
    let g_max = u16_at(10);
    let n_tensors = u16_at(12);
    let mut params = GnnParams::zeros(d_h, k_rounds, g_max);
    let expected = params.tensors();
    if n_tensors != expected.len() {
        return Err(bad("tensor count mismatch"));
    }
    let mut off = 14;
    let mut shapes = Vec::with_capacity(n_tensors);
    for (_, (rows, cols), _) in &expected {
        if off + 8 > buf.len() {
            return Err(bad("truncated dimension table"));
        }
        let r = u32::from_le_bytes(buf[off..off + 4].try_into().unwrap()) as usize;
        let c = u32::from_le_bytes(buf[off + 4..off + 8].try_into().unwrap()) as usize;
        if (r, c) != (*rows, *cols) {
            return Err(bad("tensor shape mismatch"));
        }
        shapes.push(r * c);
        off += 8;
    }
    drop(expected);
    for ((_, tensor), len) in params.tensors_mut().into_iter().zip(shapes) {
        debug_assert_eq!(tensor.len(), len);
        for v in tensor.iter_mut() {
            if off + 4 > buf.len() {
                return Err(bad("truncated values"));
            }
            *v = f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()) as f64;
            off += 4;
        }
    }
    if off != buf.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(params)
}

pub fn load_params_file(path: &Path) -> Result<GnnParams, GnnError> {
    let file = std::fs::File::open(path)
        .map_err(|e| GnnError::BadParamsFile(format!("{}: {e}", path.display())))?;
    load_params(std::io::BufReader::new(file))
}
