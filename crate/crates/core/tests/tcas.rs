use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokgraph::tcas::{accumulate, normalize_rows, tcas, CoOccurrence, RowNormalized};

#[test]
fn accumulate_matches_histogram_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tokens: Vec<u32> = (0..1000).map(|_| rng.gen_range(0..7)).collect();
    let labels: Vec<u32> = (0..1000).map(|_| rng.gen_range(0..3)).collect();
    let co = accumulate(&tokens, &labels, 7, 3).unwrap();
    assert_eq!(co.total(), 1000);
    for t in 0..7u32 {
        let expected = tokens.iter().filter(|&&x| x == t).count() as u64;
        assert_eq!(co.row(t as usize).iter().sum::<u64>(), expected);
    }
    for c in 0..3u32 {
        let expected = labels.iter().filter(|&&x| x == c).count() as u64;
        assert_eq!((0..7).map(|t| co.get(t, c as usize)).sum::<u64>(), expected);
    }
}

#[test]
fn zero_exactly_for_one_hot_orthogonal_rows() {
    // Two tokens on class 0, one on class 2: rows are one-hot but not orthogonal.
    let shared = CoOccurrence::from_rows(&[vec![3, 0, 0], vec![5, 0, 0], vec![0, 0, 1]]).unwrap();
    assert!(tcas(&normalize_rows(&shared)).value > 0.0);
    let aligned = CoOccurrence::from_rows(&[vec![3, 0, 0], vec![0, 0, 2], vec![0, 4, 0]]).unwrap();
    assert_eq!(tcas(&normalize_rows(&aligned)).value, 0.0);
}

#[test]
fn csv_round_trip_through_file() {
    let co = CoOccurrence::from_rows(&[vec![1, 2], vec![0, 7], vec![4, 0]]).unwrap();
    let mut buf = Vec::new();
    co.write_csv(&mut buf).unwrap();
    assert_eq!(CoOccurrence::read_csv(buf.as_slice()).unwrap(), co);
}

#[test]
fn score_terms_add_up() {
    let r = RowNormalized::from_rows(3, 2, vec![0.25, 0.75, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let s = tcas(&r);
    assert!((s.value - (s.term1 + s.term2)).abs() < 1e-15);
    assert_eq!(s.dead_rows, 1);
    assert_eq!((s.lambda1, s.lambda2), (1.0 / 3.0, 1.0 / 9.0));
}
