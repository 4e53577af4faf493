use std::collections::{HashSet, VecDeque};

use super::*;
use crate::cluster::find_clusters;

fn random_grid(side: usize, p: f64, seed: Seed) -> BinaryGrid {
    sample_configuration(&PercConfig::new(side - 1, p).unwrap(), seed)
}

#[test]
fn extreme_probabilities() {
    let one = sample_configuration(&PercConfig::new(20, 1.0).unwrap(), Seed(1));
    assert_eq!(one.count(Color::White), 0);
    let zero = sample_configuration(&PercConfig::new(20, 0.0).unwrap(), Seed(1));
    assert_eq!(zero.count(Color::Black), 0);
    assert!(PercConfig::new(3, 1.01).is_err());
}

#[test]
fn half_occupation_fraction() {
    let g = sample_configuration(&PercConfig::new(316, 0.5).unwrap(), Seed(17));
    let m = g.dims().len() as f64;
    assert!(m >= 1e5);
    let frac = g.count(Color::Black) as f64 / m;
    assert!((frac - 0.5).abs() <= 4.0 * (0.25 / m).sqrt(), "{frac}");
}

#[test]
fn single_row_crossings() {
    let g = BinaryGrid::from_strs(&["00000", "11111", "00000", "00000", "00000"]).unwrap();
    for adj in [Adjacency::Triangular, Adjacency::Square] {
        assert!(has_crossing(&g, Color::Black, Direction::LeftRight, adj));
        assert!(!has_crossing(&g, Color::Black, Direction::TopBottom, adj));
    }
    assert!(!closed_tb(&g));
    let one = BinaryGrid::from_strs(&["1"]).unwrap();
    assert!(open_lr(&one) && !closed_tb(&one));
}

#[test]
fn diagonal_direction_matters_for_crossings() {
    // Anti-diagonal black staircase: no triangular neighbor links.
    let g = BinaryGrid::from_strs(&["001", "010", "100"]).unwrap();
    assert!(!open_lr(&g));
    assert!(closed_tb(&g));
    let t = BinaryGrid::from_strs(&["100", "010", "001"]).unwrap();
    assert!(open_lr(&t));
    assert!(!closed_tb(&t));
}

#[test]
fn exactly_one_crossing_in_every_small_box() {
    for n in 0..=3 {
        let e = enumerate_crossings(n).unwrap();
        assert_eq!(e.exclusive_count, e.total, "n = {n}");
    }
    assert_eq!(enumerate_crossings(2).unwrap().total, 512);
    assert!(enumerate_crossings(4).is_err());
}

#[test]
fn exact_duality_polynomials() {
    for n in 1..=3 {
        let e = enumerate_crossings(n).unwrap();
        assert!((e.open_lr.probability(0.5) - 0.5).abs() < 1e-12);
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            let a = e.open_lr.probability(p);
            assert!((a + e.closed_tb.probability(p) - 1.0).abs() < 1e-12);
            assert!((a + e.open_lr.probability(1.0 - p) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn fkg_holds_exactly_on_small_boxes() {
    for n in 1..=3 {
        let e = enumerate_crossings(n).unwrap();
        for p in [0.2, 0.5, 0.8] {
            let (a, b, ab) = (
                e.open_lr.probability(p),
                e.open_tb.probability(p),
                e.open_both.probability(p),
            );
            assert!(ab >= a * b, "n = {n}, p = {p}: {ab} < {a} * {b}");
        }
    }
}

#[test]
fn monte_carlo_matches_exact_enumeration() {
    let e = enumerate_crossings(2).unwrap();
    for k in 1..=9 {
        let p = k as f64 / 10.0;
        let s = estimate_crossing(&PercConfig::new(2, p).unwrap(), 20_000, Seed(3).derive(k)).unwrap();
        let exact = e.open_lr.probability(p);
        let se = binomial_se(exact, s.trials);
        assert!((s.a_frequency() - exact).abs() <= 4.0 * se, "p = {p}");
        assert!(s.exclusive());
    }
}

#[test]
fn crossing_estimates_are_exclusive() {
    let s = estimate_crossing(&PercConfig::new(16, 0.5).unwrap(), 500, Seed(2)).unwrap();
    assert!(s.exclusive());
    assert!(estimate_crossing(&PercConfig::new(16, 0.5).unwrap(), 99, Seed(2)).is_err());
}

#[test]
fn supercritical_crossings_are_near_certain() {
    let s = estimate_crossing(&PercConfig::new(64, 0.8).unwrap(), 1000, Seed(5)).unwrap();
    assert!(s.a_frequency() > 0.99);
}

/// Smallest number of black sites on any white-or-black top-bottom path.
/// Recoloring those sites white blocks every black left-right crossing, and
/// on the triangular lattice no cheaper blocking set exists.
fn dual_path_oracle(g: &BinaryGrid) -> usize {
    let d = g.dims();
    let cost = |i: usize| g.values()[i] as usize;
    let mut dist = vec![usize::MAX; d.len()];
    let mut dq = VecDeque::new();
    for c in 0..d.width {
        dist[c] = cost(c);
        if cost(c) == 0 {
            dq.push_front(c);
        } else {
            dq.push_back(c);
        }
    }
    let mut buf = [0usize; 6];
    while let Some(u) = dq.pop_front() {
        let k = neighbor_indices(u, d, Adjacency::Triangular, &mut buf);
        for &v in &buf[..k] {
            let nd = dist[u] + cost(v);
            if nd < dist[v] {
                dist[v] = nd;
                if cost(v) == 0 {
                    dq.push_front(v);
                } else {
                    dq.push_back(v);
                }
            }
        }
    }
    (0..d.width).map(|c| dist[(d.height - 1) * d.width + c]).min().unwrap()
}

/// Smallest set of black sites whose removal kills every black left-right
/// crossing, by trying all subsets in order of size.
fn brute_min_cut(g: &BinaryGrid) -> usize {
    let black: Vec<usize> = (0..g.dims().len()).filter(|&i| g.values()[i]).collect();
    fn search(g: &mut BinaryGrid, black: &[usize], from: usize, left: usize) -> bool {
        if left == 0 {
            return !open_lr(g);
        }
        for k in from..black.len() {
            let c = g.dims().coord(black[k]);
            g.set(c, Color::White);
            let ok = search(g, black, k + 1, left - 1);
            g.set(c, Color::Black);
            if ok {
                return true;
            }
        }
        false
    }
    let mut work = g.clone();
    (0..=black.len())
        .find(|&k| search(&mut work, &black, 0, k))
        .unwrap()
}

fn assert_valid_witness(dc: &DisjointCrossings) {
    let d = dc.grid.dims();
    assert_eq!(dc.paths.len(), dc.m_n);
    let mut used = HashSet::new();
    for path in &dc.paths {
        assert_eq!(path.first().unwrap().col, 0);
        assert_eq!(path.last().unwrap().col, d.width - 1);
        for w in path.windows(2) {
            assert!(crate::lattice::neighbors(w[0], d, Adjacency::Triangular).unwrap().contains(&w[1]));
        }
        for &p in path {
            assert_eq!(dc.grid.get(p), Color::Black);
            assert!(used.insert(p), "paths share {p:?}");
        }
    }
}

#[test]
fn disjoint_crossings_trivial_grids() {
    for n in [0, 1, 5, 12] {
        let d = GridDims::square(n + 1).unwrap();
        let all = max_disjoint_crossings(&BinaryGrid::filled(d, Color::Black), Adjacency::Triangular);
        assert_eq!(all.m_n, n + 1);
        assert_valid_witness(&all);
        let none = max_disjoint_crossings(&BinaryGrid::filled(d, Color::White), Adjacency::Triangular);
        assert_eq!(none.m_n, 0);
    }
}

#[test]
fn dual_oracle_agrees_with_brute_force_cut() {
    for t in 0..150u64 {
        let p = 0.35 + 0.5 * Seed(40).uniform(t);
        let g = random_grid(5, p, Seed(41).derive(t));
        assert_eq!(dual_path_oracle(&g), brute_min_cut(&g), "trial {t}");
    }
}

#[test]
fn disjoint_crossings_match_oracles() {
    for t in 0..200u64 {
        let p = 0.3 + 0.6 * Seed(50).uniform(t);
        let g = random_grid(8, p, Seed(51).derive(t));
        let dc = max_disjoint_crossings(&g, Adjacency::Triangular);
        assert_eq!(dc.m_n, dual_path_oracle(&g), "trial {t}");
        assert_valid_witness(&dc);
        assert!(dc.m_n <= 8);
        assert_eq!(dc.m_n >= 1, open_lr(&g));
    }
    for t in 0..60u64 {
        let g = random_grid(5, 0.4 + 0.4 * Seed(52).uniform(t), Seed(53).derive(t));
        assert_eq!(max_disjoint_crossings(&g, Adjacency::Triangular).m_n, brute_min_cut(&g));
    }
}

#[test]
fn disjoint_crossings_monotone_in_p() {
    for t in 0..40u64 {
        let seed = Seed(60).derive(t);
        let mut last = 0;
        for k in 0..=10 {
            let g = sample_configuration(&PercConfig::new(15, k as f64 / 10.0).unwrap(), seed);
            let m = max_disjoint_crossings(&g, Adjacency::Triangular).m_n;
            assert!(m >= last);
            last = m;
        }
        assert_eq!(last, 16);
    }
}

#[test]
fn disjoint_crossings_grow_with_box() {
    let median = |n: usize| {
        let mut m: Vec<usize> = (0..41u64)
            .map(|t| {
                let g = sample_configuration(&PercConfig::new(n, 0.7).unwrap(), Seed(70).derive(t));
                max_disjoint_crossings(&g, Adjacency::Triangular).m_n
            })
            .collect();
        m.sort();
        m[20]
    };
    let (a, b, c) = (median(8), median(24), median(64));
    assert!(a < b && b < c, "{a} {b} {c}");
}

#[test]
fn lazy_center_cluster_matches_full_sample() {
    for t in 0..200u64 {
        let cfg = PercConfig::new(30, 0.3 + 0.25 * Seed(80).uniform(t)).unwrap();
        let seed = Seed(81).derive(t);
        let g = sample_configuration(&cfg, seed);
        let d = g.dims();
        let center = PixelCoord::new(d.height / 2, d.width / 2);
        let full = find_clusters(&g, Color::Black, Adjacency::Triangular)
            .clusters
            .into_iter()
            .find(|c| c.contains(center))
            .map_or(0, |c| c.size());
        assert_eq!(center_cluster_size(&cfg, seed, usize::MAX), full);
        assert_eq!(center_cluster_size(&cfg, seed, 12), full.min(12));
    }
}

#[test]
fn cluster_tail_errors() {
    assert!(matches!(
        estimate_cluster_tail(0.6, &[5, 10], 200, 100, Seed(1)),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        estimate_cluster_tail(0.0, &[1, 2, 3], 200, 100, Seed(1)),
        Err(Error::DegenerateFit(_))
    ));
    assert!(estimate_cluster_tail(0.3, &[5, 60], 200, 100, Seed(1)).is_err());
    assert!(estimate_cluster_tail(0.3, &[], 200, 100, Seed(1)).is_err());
}

#[test]
fn two_site_cluster_probability() {
    let p = 0.3;
    let trials = 100_000;
    let fit = estimate_cluster_tail(p, &[1, 2, 3], 40, trials, Seed(90)).unwrap();
    let exact = p * (1.0 - (1.0 - p).powi(6));
    let se = binomial_se(exact, trials);
    assert!((fit.estimates[1] - exact).abs() <= 4.0 * se, "{} vs {exact}", fit.estimates[1]);
    assert!((fit.estimates[0] - p).abs() <= 4.0 * binomial_se(p, trials));
}

#[test]
fn fkg_saturates_at_full_occupation() {
    let r = check_fkg(&PercConfig::new(8, 1.0).unwrap(), 1000, Seed(1)).unwrap();
    assert_eq!((r.p_a, r.p_b, r.p_ab), (1.0, 1.0, 1.0));
    assert!(check_fkg(&PercConfig::new(8, 0.5).unwrap(), 999, Seed(1)).is_err());
}

#[test]
fn csv_rows() {
    let rows = vec![EstimateRow {
        n: 64,
        p: 0.5,
        estimate: 0.4987,
        stderr: 0.005,
    }];
    let mut out = Vec::new();
    write_estimates_csv(&rows, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "n,p,estimate,stderr\n64,0.5,0.4987,0.005\n");
}
