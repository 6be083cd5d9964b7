//! Word-parallel simulation with a two-plane encoding: a lane is 1 when
//! its `ones` bit is set, 0 when its `zeros` bit is set, X when neither.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Init, Lit, Netlist, Node};

/// Packed values of one net over all runs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub ones: Vec<u64>,
    pub zeros: Vec<u64>,
}

impl Signature {
    pub fn inverted(&self) -> Signature {
        Signature { ones: self.zeros.clone(), zeros: self.ones.clone() }
    }

    /// True when no lane is X.
    pub fn is_binary(&self, runs: usize) -> bool {
        self.ones.iter().zip(&self.zeros).enumerate().all(|(w, (o, z))| (o | z) == lane_mask(runs, w))
    }
}

fn lane_mask(runs: usize, word: usize) -> u64 {
    let left = runs - word * 64;
    if left >= 64 {
        !0
    } else {
        (1u64 << left) - 1
    }
}

/// One signature per node, sampled at a fixed cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signatures {
    pub runs: usize,
    pub depth: usize,
    pub seed: u64,
    ones: Vec<Vec<u64>>,
    zeros: Vec<Vec<u64>>,
}

impl Signatures {
    pub fn of(&self, l: Lit) -> Signature {
        let n = l.node() as usize;
        let s = Signature { ones: self.ones[n].clone(), zeros: self.zeros[n].clone() };
        if l.is_inverted() {
            s.inverted()
        } else {
            s
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.ones.len()
    }
}

/// FNV-1a, used to derive per-input random streams from input names.
fn name_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// Simulates `runs` random input sequences for `depth` cycles and records
/// every node's value at cycle `depth`. Deterministic in `seed`; each
/// input's stimulus depends only on the seed and the input name.
pub fn random_signatures(nl: &Netlist, runs: usize, depth: usize, seed: u64) -> Signatures {
    random_signatures_keyed(nl, runs, depth, seed, &|n| n.to_string())
}

/// [`random_signatures`] where input stimulus is keyed by `key(name)`, so
/// two designs whose inputs map onto each other see identical stimulus.
pub fn random_signatures_keyed(
    nl: &Netlist,
    runs: usize,
    depth: usize,
    seed: u64,
    key: &dyn Fn(&str) -> String,
) -> Signatures {
    assert!(runs >= 1);
    let words = runs.div_ceil(64);
    let mut streams: Vec<ChaCha8Rng> = nl
        .inputs
        .iter()
        .map(|i| ChaCha8Rng::seed_from_u64(seed ^ name_hash(&key(&i.name))))
        .collect();
    let n = nl.nodes.len();
    let mut ones = vec![vec![0u64; words]; n];
    let mut zeros = vec![vec![0u64; words]; n];
    let mut st_one: Vec<Vec<u64>> = Vec::new();
    let mut st_zero: Vec<Vec<u64>> = Vec::new();
    for r in &nl.registers {
        let (o, z) = match r.init {
            Init::Zero => (0, !0),
            Init::One => (!0, 0),
            Init::Uninit => (0, 0),
        };
        st_one.push((0..words).map(|w| o & lane_mask(runs, w)).collect());
        st_zero.push((0..words).map(|w| z & lane_mask(runs, w)).collect());
    }
    for cycle in 0..=depth {
        for (id, node) in nl.nodes.iter().enumerate() {
            for w in 0..words {
                let mask = lane_mask(runs, w);
                let (o, z) = match *node {
                    Node::Const => (0, mask),
                    Node::Input(i) => {
                        let r: u64 = streams[i as usize].gen::<u64>() & mask;
                        (r, !r & mask)
                    }
                    Node::Reg(r) => (st_one[r as usize][w], st_zero[r as usize][w]),
                    Node::And(a, b) => {
                        let (ao, az) = planes(&ones, &zeros, a, w);
                        let (bo, bz) = planes(&ones, &zeros, b, w);
                        (ao & bo, az | bz)
                    }
                };
                ones[id][w] = o;
                zeros[id][w] = z;
            }
        }
        if cycle < depth {
            for (i, r) in nl.registers.iter().enumerate() {
                for w in 0..words {
                    let (o, z) = planes(&ones, &zeros, r.next, w);
                    st_one[i][w] = o;
                    st_zero[i][w] = z;
                }
            }
        }
    }
    Signatures { runs, depth, seed, ones, zeros }
}

#[inline]
fn planes(ones: &[Vec<u64>], zeros: &[Vec<u64>], l: Lit, w: usize) -> (u64, u64) {
    let n = l.node() as usize;
    if l.is_inverted() {
        (zeros[n][w], ones[n][w])
    } else {
        (ones[n][w], zeros[n][w])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{InputKind, NetlistBuilder};

    #[test]
    fn constants_and_double_negation() {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let c = b.input("c", InputKind::Primary);
        let x = b.and(a, c);
        b.output("y", x);
        let nl = b.finish();
        let s = random_signatures(&nl, 100, 0, 1);
        assert!(s.of(Lit::FALSE).ones.iter().all(|&w| w == 0));
        assert_eq!(s.of(!!x), s.of(x));
        assert!(s.of(x).is_binary(100));
    }

    #[test]
    fn xor_variants_agree() {
        let mut b = NetlistBuilder::new();
        let a = b.input("a", InputKind::Primary);
        let c = b.input("c", InputKind::Primary);
        let x1 = b.xor(a, c);
        // (a | c) & !(a & c)
        let o = b.or(a, c);
        let n = b.and(a, c);
        let x2 = b.and(o, !n);
        let nl = b.finish();
        let s = random_signatures(&nl, 256, 0, 9);
        assert_eq!(s.of(x1), s.of(x2));
        assert_eq!(random_signatures(&nl, 256, 0, 9), s);
    }

    #[test]
    fn uninit_is_x_lane() {
        let mut b = NetlistBuilder::new();
        let (_, r) = b.register("r", Init::Uninit);
        b.output("y", r);
        let nl = b.finish();
        let s = random_signatures(&nl, 70, 0, 3);
        let sig = s.of(r);
        assert!(sig.ones.iter().chain(&sig.zeros).all(|&w| w == 0));
    }
}
