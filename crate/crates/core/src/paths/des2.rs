//! Word table over the two-bit-controlled generators.
//!
//! The 45 non-identity controlled gates generate all permutations of the 8
//! local values: 24 of them have odd-weight control functions and are odd as
//! local permutations (they lift to even string permutations on four or more
//! wires). A breadth-first search from the identity yields a shortest word
//! for every gate they reach; lookups are restricted to even gates and gates
//! of controlled form, the two families circuits accept. The table is built
//! once per process and can be persisted to a versioned, checksummed file.

use crate::error::{Error, Result};
use crate::gate::{classify_des2, distinct_des2_gates, Gate3, ALTERNATING_ORDER, SYMMETRIC_ORDER};
use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

const MAGIC: &[u8; 10] = b"DES2WORDS\x01";
const NO_WORD: u16 = u16::MAX;

/// For every even 3-bit gate, a word over the 45 non-identity controlled
/// gates composing to it. Letters are indices into `generators()`; words are
/// read left to right, leftmost letter applied first.
pub struct Des2Table {
    gens: Vec<Gate3>,
    /// Indexed by Lehmer rank; `None` for odd permutations.
    words: Vec<Option<Box<[u8]>>>,
    diameter: usize,
}

impl Des2Table {
    /// Breadth-first search over the right-Cayley graph: a neighbor of `g` is
    /// `letter . g`, so appending a letter extends the word on the right.
    pub fn build() -> Self {
        let gens: Vec<Gate3> = distinct_des2_gates()[1..].to_vec();
        debug_assert_eq!(gens.len(), 45);

        let mut parent = vec![NO_WORD; SYMMETRIC_ORDER];
        let mut letter = vec![0u8; SYMMETRIC_ORDER];
        let mut dist = vec![NO_WORD; SYMMETRIC_ORDER];
        let id_rank = Gate3::identity().lehmer_rank() as usize;
        dist[id_rank] = 0;
        let mut queue: VecDeque<Gate3> = VecDeque::new();
        queue.push_back(Gate3::identity());
        while let Some(g) = queue.pop_front() {
            let r = g.lehmer_rank() as usize;
            for (li, l) in gens.iter().enumerate() {
                let h = l.compose(&g);
                let hr = h.lehmer_rank() as usize;
                if dist[hr] == NO_WORD {
                    dist[hr] = dist[r] + 1;
                    parent[hr] = r as u16;
                    letter[hr] = li as u8;
                    queue.push_back(h);
                }
            }
        }

        let mut words: Vec<Option<Box<[u8]>>> = vec![None; SYMMETRIC_ORDER];
        let mut diameter = 0usize;
        for rank in 0..SYMMETRIC_ORDER {
            if dist[rank] == NO_WORD {
                continue;
            }
            diameter = diameter.max(dist[rank] as usize);
            let mut letters = Vec::with_capacity(dist[rank] as usize);
            let mut cur = rank;
            while cur != id_rank {
                letters.push(letter[cur]);
                cur = parent[cur] as usize;
            }
            letters.reverse();
            words[rank] = Some(letters.into_boxed_slice());
        }
        Des2Table { gens, words, diameter }
    }

    pub fn generators(&self) -> &[Gate3] {
        &self.gens
    }

    /// Number of even gates with a word; 20160 when the generators connect
    /// the whole even-permutation group.
    pub fn reached(&self) -> usize {
        self.words
            .iter()
            .enumerate()
            .filter(|(rank, w)| {
                w.is_some() && Gate3::from_lehmer_rank(*rank as u16).unwrap().is_even()
            })
            .count()
    }

    pub fn is_complete(&self) -> bool {
        self.reached() == ALTERNATING_ORDER
    }

    /// Length of the longest shortest word.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    /// Shortest word for `g`, as gates, leftmost applied first.
    pub fn word(&self, g: &Gate3) -> Result<Vec<Gate3>> {
        Ok(self.word_letters(g)?.iter().map(|&li| self.gens[li as usize]).collect())
    }

    /// Same word as letter indices into `generators()`. Accepts even gates
    /// and gates of controlled form; other odd gates are rejected.
    pub fn word_letters(&self, g: &Gate3) -> Result<&[u8]> {
        if !g.is_even() && classify_des2(g).is_none() {
            return Err(Error::OddGate);
        }
        match &self.words[g.lehmer_rank() as usize] {
            Some(letters) => Ok(letters),
            None => Err(Error::IncompleteMap(format!("{g:?} not reached by the word table"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.push(self.gens.len() as u8);
        for g in &self.gens {
            buf.extend_from_slice(g.perm());
        }
        let count = self.words.iter().filter(|w| w.is_some()).count() as u32;
        buf.extend_from_slice(&count.to_le_bytes());
        for rank in 0..SYMMETRIC_ORDER {
            if let Some(letters) = &self.words[rank] {
                buf.extend_from_slice(&(rank as u16).to_le_bytes());
                buf.extend_from_slice(&(letters.len() as u16).to_le_bytes());
                buf.extend_from_slice(letters);
            }
        }
        let sum = fnv1a(&buf);
        buf.extend_from_slice(&sum.to_le_bytes());
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Load and fully validate: magic, checksum, generator tables, and that
    /// every stored word recomposes to its element.
    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < MAGIC.len() + 8 || &buf[..MAGIC.len()] != MAGIC {
            return Err(Error::Parse("word table file has a bad header".into()));
        }
        let body = &buf[..buf.len() - 8];
        let stored = u64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
        if fnv1a(body) != stored {
            return Err(Error::Parse("word table checksum mismatch".into()));
        }

        fn take<'a>(body: &'a [u8], at: &mut usize, len: usize) -> Result<&'a [u8]> {
            if *at + len > body.len() {
                return Err(Error::Parse("word table file truncated".into()));
            }
            let s = &body[*at..*at + len];
            *at += len;
            Ok(s)
        }

        let mut at = MAGIC.len();
        let gen_count = take(body, &mut at, 1)?[0] as usize;
        let mut gens = Vec::with_capacity(gen_count);
        for _ in 0..gen_count {
            let perm: [u8; 8] = take(body, &mut at, 8)?.try_into().unwrap();
            gens.push(Gate3::from_perm(perm)?);
        }
        if gens != distinct_des2_gates()[1..] {
            return Err(Error::Parse("word table generators do not match this build".into()));
        }

        let count = u32::from_le_bytes(take(body, &mut at, 4)?.try_into().unwrap()) as usize;
        let mut words: Vec<Option<Box<[u8]>>> = vec![None; SYMMETRIC_ORDER];
        let mut diameter = 0usize;
        for _ in 0..count {
            let rank = u16::from_le_bytes(take(body, &mut at, 2)?.try_into().unwrap()) as usize;
            let len = u16::from_le_bytes(take(body, &mut at, 2)?.try_into().unwrap()) as usize;
            let letters = take(body, &mut at, len)?;
            if rank >= SYMMETRIC_ORDER || letters.iter().any(|&l| l as usize >= gen_count) {
                return Err(Error::Parse("word table entry out of range".into()));
            }
            let mut composed = Gate3::identity();
            for &li in letters {
                composed = gens[li as usize].compose(&composed);
            }
            if composed.lehmer_rank() as usize != rank {
                return Err(Error::Parse(format!(
                    "stored word for rank {rank} recomposes to rank {}",
                    composed.lehmer_rank()
                )));
            }
            diameter = diameter.max(len);
            words[rank] = Some(letters.to_vec().into_boxed_slice());
        }
        if at != body.len() {
            return Err(Error::Parse("word table has trailing bytes".into()));
        }
        Ok(Des2Table { gens, words, diameter })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// Process-wide table, built on first use.
pub fn shared_table() -> &'static Des2Table {
    static TABLE: OnceLock<Des2Table> = OnceLock::new();
    TABLE.get_or_init(Des2Table::build)
}

/// Word over the 45 non-identity controlled gates composing to `g`,
/// leftmost letter applied first. Odd gates outside the controlled family
/// are rejected.
pub fn des2_word(g: &Gate3) -> Result<Vec<Gate3>> {
    shared_table().word(g)
}
