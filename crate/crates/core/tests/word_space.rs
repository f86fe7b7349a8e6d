use folner_core::complexity::complexity_words_exact;
use folner_core::{FolnerSequence, GroupSpec};

#[test]
fn bernoulli_half_word_space_values() {
    let seq = FolnerSequence::default_for(&GroupSpec::lattice(1)).unwrap();
    let got: Vec<usize> = [4, 6, 8, 10, 12]
        .iter()
        .map(|&n| complexity_words_exact(0.5, &seq, n, 0.4).unwrap())
        .collect();
    assert_eq!(got, vec![10, 6, 18, 56, 32]);
}
