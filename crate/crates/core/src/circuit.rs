//! Circuits of 3-bit gates on n wires.
//!
//! Wire 1 is the leftmost, most significant bit of a string. Three
//! architectures: `generic` places each gate on a uniform 3-subset of the
//! wires, `nn` on a uniform contiguous window, and `brickwork` lays down whole
//! layers of disjoint contiguous windows at a random offset parity.

use crate::error::{Error, Result};
use crate::gate::{sample_gate_alternating, sample_gate_des2, Gate3};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// An n-bit string, wire `a` stored at bit position `n - a` of the word
/// (so the integer value reads the same as the bit string).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    n: usize,
    bits: u64,
}

impl BitString {
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::ValueWidth(0, n));
        }
        Ok(BitString { n, bits: 0 })
    }

    pub fn from_word(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::ValueWidth(bits, n));
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::ValueWidth(bits, n));
        }
        Ok(BitString { n, bits })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let n = s.len();
        let mut bits = 0u64;
        if n == 0 || n > 64 {
            return Err(Error::ValueWidth(0, n));
        }
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(Error::Parse(format!("bad bit character {c:?}"))),
            }
        }
        Ok(BitString { n, bits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self) -> u64 {
        self.bits
    }

    /// Wire index is 1-based.
    pub fn bit(&self, a: usize) -> u8 {
        debug_assert!((1..=self.n).contains(&a));
        ((self.bits >> (self.n - a)) & 1) as u8
    }

    pub fn with_bit(mut self, a: usize, v: u8) -> Self {
        let pos = self.n - a;
        self.bits = (self.bits & !(1 << pos)) | ((v as u64 & 1) << pos);
        self
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for a in 1..=self.n {
            write!(f, "{}", self.bit(a))?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// Strictly ascending triple of wire indices, 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement([usize; 3]);

impl Placement {
    pub fn new(site: [usize; 3], n: usize) -> Result<Self> {
        let [a, b, c] = site;
        if a == 0 || !(a < b && b < c) || c > n {
            return Err(Error::Placement { site, n });
        }
        Ok(Placement(site))
    }

    /// Contiguous window starting at `anchor`.
    pub fn window(anchor: usize, n: usize) -> Result<Self> {
        Placement::new([anchor, anchor + 1, anchor + 2], n)
    }

    pub fn wires(&self) -> [usize; 3] {
        self.0
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.0[1] == self.0[0] + 1 && self.0[2] == self.0[1] + 1
    }

    pub fn anchor(&self) -> Option<usize> {
        if self.is_nearest_neighbor() { Some(self.0[0]) } else { None }
    }
}

impl std::fmt::Debug for Placement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{},{}}}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Generic,
    Nn,
    Brickwork,
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Arch::Generic),
            "nn" => Ok(Arch::Nn),
            "brickwork" => Ok(Arch::Brickwork),
            other => Err(Error::Parse(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateDist {
    /// Uniform over the 20160 even permutations.
    Alternating,
    /// Uniform over the 48 two-bit-controlled pairs.
    Des2,
}

impl std::str::FromStr for GateDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alt" | "alternating" => Ok(GateDist::Alternating),
            "des2" => Ok(GateDist::Des2),
            other => Err(Error::Parse(format!("unknown gate distribution {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlacedGate {
    pub gate: Gate3,
    pub site: Placement,
}

/// One brickwork layer: `parity` 0 anchors windows at 1, 4, 7, ...;
/// parity 1 at 2, 5, 8, ....
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub parity: u8,
    pub gates: Vec<PlacedGate>,
}

/// Anchors of the brickwork layer with the given offset parity.
pub fn brickwork_anchors(n: usize, parity: u8) -> Vec<usize> {
    let count = if parity == 0 { n / 3 } else { (n.saturating_sub(1)) / 3 };
    (0..count).map(|j| 3 * j + 1 + parity as usize).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    arch: Arch,
    gates: Vec<PlacedGate>,
    /// (parity, gate count) per layer; populated only for brickwork.
    layer_bounds: Vec<(u8, usize)>,
}

impl Circuit {
    pub fn empty(n: usize, arch: Arch) -> Result<Self> {
        if n < 3 {
            return Err(Error::Architecture(n));
        }
        Ok(Circuit { n, arch, gates: Vec::new(), layer_bounds: Vec::new() })
    }

    pub fn from_gates(n: usize, arch: Arch, gates: Vec<PlacedGate>) -> Result<Self> {
        let mut c = Circuit::empty(n, arch)?;
        for pg in &gates {
            Placement::new(pg.site.wires(), n)?;
            if arch == Arch::Nn && !pg.site.is_nearest_neighbor() {
                return Err(Error::Placement { site: pg.site.wires(), n });
            }
        }
        c.gates = gates;
        Ok(c)
    }

    pub fn from_layers(n: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut c = Circuit::empty(n, Arch::Brickwork)?;
        for layer in layers {
            c.push_layer(layer)?;
        }
        Ok(c)
    }

    fn push_layer(&mut self, layer: Layer) -> Result<()> {
        let anchors = brickwork_anchors(self.n, layer.parity);
        if layer.parity > 1 || layer.gates.len() != anchors.len() {
            return Err(Error::Parse(format!(
                "brickwork layer with parity {} on {} wires must have {} gates",
                layer.parity,
                self.n,
                anchors.len()
            )));
        }
        for (pg, &anchor) in layer.gates.iter().zip(&anchors) {
            if pg.site.anchor() != Some(anchor) {
                return Err(Error::Placement { site: pg.site.wires(), n: self.n });
            }
        }
        self.layer_bounds.push((layer.parity, layer.gates.len()));
        self.gates.extend(layer.gates);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn gates(&self) -> &[PlacedGate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn layers(&self) -> impl Iterator<Item = (u8, &[PlacedGate])> {
        let mut start = 0;
        self.layer_bounds.iter().map(move |&(parity, len)| {
            let slice = &self.gates[start..start + len];
            start += len;
            (parity, slice)
        })
    }

    pub fn layer_count(&self) -> usize {
        self.layer_bounds.len()
    }

    pub fn evaluate(&self, x: &BitString) -> Result<BitString> {
        if x.n() != self.n {
            return Err(Error::WireMismatch { expected: self.n, got: x.n() });
        }
        let mut y = *x;
        for pg in &self.gates {
            y = apply_gate(&pg.gate, &pg.site, &y)?;
        }
        Ok(y)
    }

    pub fn invert(&self, y: &BitString) -> Result<BitString> {
        if y.n() != self.n {
            return Err(Error::WireMismatch { expected: self.n, got: y.n() });
        }
        let mut x = *y;
        for pg in self.gates.iter().rev() {
            x = apply_gate(&pg.gate.inverse(), &pg.site, &x)?;
        }
        Ok(x)
    }
}

/// Apply a gate to the three site wires; all other bits pass through.
pub fn apply_gate(g: &Gate3, site: &Placement, x: &BitString) -> Result<BitString> {
    let [a, b, c] = site.wires();
    if c > x.n() {
        return Err(Error::Placement { site: site.wires(), n: x.n() });
    }
    let v = (x.bit(a) << 2) | (x.bit(b) << 1) | x.bit(c);
    let w = g.image(v);
    Ok(x.with_bit(a, (w >> 2) & 1).with_bit(b, (w >> 1) & 1).with_bit(c, w & 1))
}

fn sample_gate<R: Rng + ?Sized>(dist: GateDist, rng: &mut R) -> Gate3 {
    match dist {
        GateDist::Alternating => sample_gate_alternating(rng),
        GateDist::Des2 => sample_gate_des2(rng),
    }
}

/// Uniform 3-subset of the wires, by partial Fisher-Yates over 1..=n.
fn sample_site_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Placement {
    let mut wires: Vec<usize> = (1..=n).collect();
    for i in 0..3 {
        let j = rng.gen_range(i..n);
        wires.swap(i, j);
    }
    let mut site = [wires[0], wires[1], wires[2]];
    site.sort_unstable();
    Placement::new(site, n).unwrap()
}

/// One brickwork layer with a fresh uniform offset parity and independent
/// gates at each window of that layer.
pub fn sample_layer_brickwork<R: Rng + ?Sized>(
    n: usize,
    dist: GateDist,
    rng: &mut R,
) -> Result<Layer> {
    if n < 3 {
        return Err(Error::Architecture(n));
    }
    let parity = rng.gen_range(0..2u8);
    let gates = brickwork_anchors(n, parity)
        .into_iter()
        .map(|a| {
            Ok(PlacedGate { gate: sample_gate(dist, rng), site: Placement::window(a, n)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Layer { parity, gates })
}

/// Random circuit of `t` gates (generic, nn) or `t` layers (brickwork).
pub fn sample_circuit<R: Rng + ?Sized>(
    arch: Arch,
    dist: GateDist,
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<Circuit> {
    let mut c = Circuit::empty(n, arch)?;
    match arch {
        Arch::Generic => {
            for _ in 0..t {
                let site = sample_site_uniform(n, rng);
                c.gates.push(PlacedGate { gate: sample_gate(dist, rng), site });
            }
        }
        Arch::Nn => {
            for _ in 0..t {
                let anchor = rng.gen_range(1..=n - 2);
                let site = Placement::window(anchor, n)?;
                c.gates.push(PlacedGate { gate: sample_gate(dist, rng), site });
            }
        }
        Arch::Brickwork => {
            for _ in 0..t {
                let layer = sample_layer_brickwork(n, dist, rng)?;
                c.push_layer(layer)?;
            }
        }
    }
    Ok(c)
}
