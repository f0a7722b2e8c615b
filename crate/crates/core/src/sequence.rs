//! Rule sequences `x = (x_1, x_2, …)` and the laws that generate them.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::substitution::TypeHFamily;
use crate::{Error, Result};

/// Generator of rule sequences. Rule indices are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Law {
    /// The word repeated forever; a fixed sequence is a period-one word.
    Periodic(Vec<usize>),
    /// Independent draws with the given rule probabilities.
    Bernoulli(Vec<f64>),
}

impl Law {
    /// Parses `fixed:<word>`, `periodic:<word>` or `bernoulli:<p1,…,pN>`.
    pub fn parse(s: &str, family: &TypeHFamily) -> Result<Law> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| Error::InvalidLaw(s.into()))?;
        match kind {
            "fixed" | "periodic" => Ok(Law::Periodic(parse_word(arg, family)?)),
            "bernoulli" => {
                let p: Vec<f64> = arg
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidLaw(s.into())))
                    .collect::<Result<_>>()?;
                let law = Law::Bernoulli(p);
                law.check(family)?;
                Ok(law)
            }
            _ => Err(Error::InvalidLaw(s.into())),
        }
    }

    pub fn check(&self, family: &TypeHFamily) -> Result<()> {
        match self {
            Law::Periodic(w) if w.is_empty() => Err(Error::InvalidLaw("empty word".into())),
            Law::Periodic(w) => match w.iter().find(|&&r| r >= family.n_rules()) {
                Some(r) => Err(Error::UnknownSymbol(format!("{}", r + 1))),
                None => Ok(()),
            },
            Law::Bernoulli(p) => {
                let total: f64 = p.iter().sum();
                if p.len() != family.n_rules() || p.iter().any(|x| x.is_nan() || *x < 0.0) || (total - 1.0).abs() > 1e-9 {
                    Err(Error::InvalidLaw(format!("bernoulli weights {p:?} for {} rules", family.n_rules())))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Rules that occur with positive probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = match self {
            Law::Periodic(w) => w.clone(),
            Law::Bernoulli(p) => (0..p.len()).filter(|&i| p[i] > 0.0).collect(),
        };
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Law::Bernoulli(_))
    }

    pub fn sample(&self, len: usize, seed: u64) -> Vec<usize> {
        match self {
            Law::Periodic(w) => (0..len).map(|i| w[i % w.len()]).collect(),
            Law::Bernoulli(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dist = WeightedIndex::new(p).expect("validated weights");
                (0..len).map(|_| dist.sample(&mut rng)).collect()
            }
        }
    }
}

/// Parses a word of rule ids: comma separated, or one character per symbol.
/// Tokens that are not rule ids are read as one-based rule numbers.
pub fn parse_word(s: &str, family: &TypeHFamily) -> Result<Vec<usize>> {
    let tokens: Vec<String> = if s.contains(',') {
        s.split(',').map(|t| t.trim().to_string()).collect()
    } else {
        s.trim().chars().map(String::from).collect()
    };
    if tokens.is_empty() {
        return Err(Error::InvalidLaw("empty word".into()));
    }
    tokens
        .iter()
        .map(|t| {
            if let Some(i) = family.rules.iter().position(|r| &r.id == t) {
                return Ok(i);
            }
            match t.parse::<usize>() {
                Ok(k) if k >= 1 && k <= family.n_rules() => Ok(k - 1),
                _ => Err(Error::UnknownSymbol(t.clone())),
            }
        })
        .collect()
}

/// A window `x_{-m..0} | x_1..x_n` of a two-sided rule sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSequence {
    /// `x_1, x_2, …`
    pub positive: Vec<usize>,
    /// `x_0, x_{-1}, …` (nearest first).
    pub negative: Vec<usize>,
}

impl ParameterSequence {
    pub fn new(positive: Vec<usize>) -> Self {
        ParameterSequence { positive, negative: Vec::new() }
    }

    pub fn from_law(law: &Law, len: usize, seed: u64) -> Self {
        Self::new(law.sample(len, seed))
    }

    /// Left shift `σ`: `x_1` moves to the negative side.
    pub fn shift(&self) -> Self {
        let mut negative = self.negative.clone();
        let mut positive = self.positive.clone();
        if !positive.is_empty() {
            negative.insert(0, positive.remove(0));
        }
        ParameterSequence { positive, negative }
    }
}
