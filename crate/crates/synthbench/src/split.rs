use crate::error::{Result, SynthError};
use crate::vocab::Vocabulary;
use rand::seq::SliceRandom;
use std::collections::BTreeSet;
use tensor_core::seed;

/// Disjoint verb-noun pair sets with every verb and every noun present in
/// both: nouns split into halves A/B and verbs into groups 1/2, train is
/// `1xA + 2xB`, test is `1xB + 2xA`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionalSplit {
    pub train_pairs: BTreeSet<(usize, usize)>,
    pub test_pairs: BTreeSet<(usize, usize)>,
}

impl CompositionalSplit {
    pub fn contains(&self, verb: usize, noun: usize) -> bool {
        self.train_pairs.contains(&(verb, noun)) || self.test_pairs.contains(&(verb, noun))
    }
}

/// Builds the compositional split. The seeded shuffle decides which verbs
/// and nouns share a half; halves are canonicalized so verb 0 sits in group
/// 1 and noun 0 in half A, keeping the smallest instances stable.
pub fn make_split(vocab: &Vocabulary, split_seed: u64) -> Result<CompositionalSplit> {
    let nv = vocab.num_verbs();
    let nn = vocab.num_nouns();
    if nv < 2 || nn < 2 {
        return Err(SynthError::VocabularyTooSmall {
            verbs: nv,
            nouns: nn,
        });
    }
    let mut rng = seed::rng(split_seed, "split");
    let mut verb_order: Vec<usize> = (0..nv).collect();
    let mut noun_order: Vec<usize> = (0..nn).collect();
    verb_order.shuffle(&mut rng);
    noun_order.shuffle(&mut rng);

    let (mut group1, mut group2): (Vec<usize>, Vec<usize>) = {
        let half = nv / 2;
        (verb_order[..half].to_vec(), verb_order[half..].to_vec())
    };
    let (mut half_a, mut half_b): (Vec<usize>, Vec<usize>) = {
        let half = nn / 2;
        (noun_order[..half].to_vec(), noun_order[half..].to_vec())
    };
    if group2.contains(&0) {
        std::mem::swap(&mut group1, &mut group2);
    }
    if half_b.contains(&0) {
        std::mem::swap(&mut half_a, &mut half_b);
    }

    let mut train_pairs = BTreeSet::new();
    let mut test_pairs = BTreeSet::new();
    for &v in &group1 {
        for &n in &half_a {
            train_pairs.insert((v, n));
        }
        for &n in &half_b {
            test_pairs.insert((v, n));
        }
    }
    for &v in &group2 {
        for &n in &half_b {
            train_pairs.insert((v, n));
        }
        for &n in &half_a {
            test_pairs.insert((v, n));
        }
    }
    Ok(CompositionalSplit {
        train_pairs,
        test_pairs,
    })
}
