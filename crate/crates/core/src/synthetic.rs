//! Generator for a small keyword-planted corpus in Telugu script, with random
//! embeddings, for experiments without the real data.
//!
//! Every class owns a set of keywords (the first two classes share part of
//! theirs); the remaining vocabulary words are class-neutral. Each token of
//! a document is, with probability `noise_rate`, drawn uniformly from the
//! whole vocabulary; otherwise it is a keyword of the document's class with
//! probability `keyword_rate` and a neutral word the rest of the time.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embedding::{EmbeddingTable, OovPolicy};
use crate::eval::LabeledDataset;

/// The six domains with their training-split sizes in the reference corpus.
pub const DOMAIN_PROPORTIONS: [(&str, usize); 6] = [
    ("cse", 24937),
    ("phy", 16839),
    ("com_tech", 11626),
    ("bio_tech", 7468),
    ("mgnt", 2347),
    ("other", 5648),
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// Class names with relative frequencies.
    pub classes: Vec<(String, usize)>,
    pub train_docs: usize,
    pub val_docs: usize,
    pub vocab_size: usize,
    pub keywords_per_class: usize,
    /// Keywords shared between the first two classes.
    pub shared_keywords: usize,
    pub noise_rate: f64,
    pub keyword_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: DOMAIN_PROPORTIONS
                .iter()
                .map(|(c, n)| (c.to_string(), *n))
                .collect(),
            train_docs: 600,
            val_docs: 120,
            vocab_size: 500,
            keywords_per_class: 8,
            shared_keywords: 2,
            noise_rate: 0.2,
            keyword_rate: 0.5,
            min_len: 10,
            max_len: 30,
            dim: 32,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub vocabulary: Vec<String>,
    pub embeddings: EmbeddingTable,
}

const CONSONANTS: [char; 20] = [
    'క', 'గ', 'చ', 'జ', 'ట', 'డ', 'త', 'ద', 'న', 'ప', 'బ', 'మ', 'య', 'ర', 'ల', 'వ', 'స', 'హ', 'ళ', 'శ',
];
const VOWEL_SIGNS: [&str; 5] = ["", "ా", "ి", "ు", "ె"];

/// A distinct pronounceable Telugu-script word for each index.
pub fn synthetic_word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWEL_SIGNS.len();
    let mut n = index;
    let mut out = String::new();
    // three syllables cover 10^6 words; a fixed length keeps words distinct
    for _ in 0..3 {
        let s = n % base;
        n /= base;
        out.push(CONSONANTS[s / VOWEL_SIGNS.len()]);
        out.push_str(VOWEL_SIGNS[s % VOWEL_SIGNS.len()]);
    }
    out
}

/// Splits `total` in proportion to `weights` by largest remainder.
pub fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut counts: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse((total * weights[i]) % sum), i));
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

impl SyntheticConfig {
    fn validate(&self) -> Result<(), String> {
        let c = self.classes.len();
        let keywords = c * self.keywords_per_class - self.shared_keywords.min(self.keywords_per_class);
        if c < 2 {
            return Err("need at least two classes".into());
        }
        if keywords >= self.vocab_size {
            return Err(format!(
                "{keywords} keywords leave no neutral words in a vocabulary of {}",
                self.vocab_size
            ));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(format!("bad length range {}..={}", self.min_len, self.max_len));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) || !(0.0..=1.0).contains(&self.keyword_rate) {
            return Err("rates must lie in [0, 1]".into());
        }
        if self.dim == 0 || self.keywords_per_class == 0 {
            return Err("dim and keywords_per_class must be positive".into());
        }
        Ok(())
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus, String> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocabulary: Vec<String> = (0..cfg.vocab_size).map(synthetic_word).collect();
    let mut ids: Vec<usize> = (0..cfg.vocab_size).collect();
    ids.shuffle(&mut rng);

    let c = cfg.classes.len();
    let k = cfg.keywords_per_class;
    let shared = cfg.shared_keywords.min(k);
    let mut next = 0;
    let mut take = |n: usize| {
        let s = ids[next..next + n].to_vec();
        next += n;
        s
    };
    let mut keywords: Vec<Vec<usize>> = Vec::with_capacity(c);
    keywords.push(take(k));
    let mut second = keywords[0][..shared].to_vec();
    second.extend(take(k - shared));
    keywords.push(second);
    for _ in 2..c {
        keywords.push(take(k));
    }
    let neutral = ids[c * k - shared..].to_vec();

    let weights: Vec<usize> = cfg.classes.iter().map(|(_, w)| *w).collect();
    let names: Vec<String> = cfg.classes.iter().map(|(n, _)| n.clone()).collect();
    let mut split = |total: usize| {
        let mut labels: Vec<usize> = apportion(total, &weights)
            .into_iter()
            .enumerate()
            .flat_map(|(ci, n)| std::iter::repeat_n(ci, n))
            .collect();
        labels.shuffle(&mut rng);
        let docs = labels
            .into_iter()
            .map(|ci| {
                let len = rng.random_range(cfg.min_len..=cfg.max_len);
                let words: Vec<&str> = (0..len)
                    .map(|_| {
                        let id = if rng.random::<f64>() < cfg.noise_rate {
                            rng.random_range(0..cfg.vocab_size)
                        } else if rng.random::<f64>() < cfg.keyword_rate {
                            *keywords[ci].choose(&mut rng).expect("nonempty")
                        } else {
                            *neutral.choose(&mut rng).expect("nonempty")
                        };
                        vocabulary[id].as_str()
                    })
                    .collect();
                (words.join(" "), names[ci].clone())
            })
            .collect();
        LabeledDataset::with_classes(docs, names.clone()).expect("labels drawn from class list")
    };
    let train = split(cfg.train_docs);
    let val = split(cfg.val_docs);

    let normal = Normal::new(0.0, 1.0 / (cfg.dim as f64).sqrt()).expect("valid deviation");
    let mut embeddings = EmbeddingTable::new(cfg.dim, OovPolicy::SubwordAverage);
    for w in &vocabulary {
        let v = (0..cfg.dim).map(|_| normal.sample(&mut rng)).collect();
        embeddings.insert(w.clone(), v).expect("dimension matches");
    }
    Ok(SyntheticCorpus {
        train,
        val,
        vocabulary,
        embeddings,
    })
}
