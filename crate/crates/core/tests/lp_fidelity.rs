//! Re-reads emitted LP documents with a parser of its own and searches
//! their integer points exhaustively.

use std::collections::HashMap;

use tap_core::encode::to_lp;
use tap_core::generate::small;
use tap_core::model::build;
use tap_core::solver::{brute_force, Status};

/// Smallest (`end` 0) or largest (`end` 1) value of one term.
fn act(lo: &[i64], hi: &[i64], end: usize, (c, v): (i64, usize)) -> i64 {
    if (c > 0) == (end == 0) {
        c * lo[v]
    } else {
        c * hi[v]
    }
}

#[derive(Debug, Default)]
struct Lp {
    names: Vec<String>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    objective: Vec<(i64, usize)>,
    /// (terms, relation, rhs)
    rows: Vec<(Vec<(i64, usize)>, String, i64)>,
}

impl Lp {
    fn var(&mut self, index: &mut HashMap<String, usize>, name: &str) -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            self.names.push(name.to_string());
            self.lo.push(0);
            self.hi.push(i64::MAX / 4);
            self.names.len() - 1
        })
    }

    fn parse(text: &str) -> Lp {
        let mut lp = Lp::default();
        let mut index = HashMap::new();
        let mut section = String::new();
        let mut statements: Vec<(String, String)> = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('\\')) {
            if !line.starts_with(' ') {
                section = line.trim().to_string();
                continue;
            }
            let continues = line.starts_with("   ") && matches!(section.as_str(), "Minimize" | "Subject To");
            if continues {
                statements.last_mut().unwrap().1.push_str(line);
            } else {
                statements.push((section.clone(), line.to_string()));
            }
        }
        for (section, stmt) in statements {
            let words: Vec<&str> = stmt.split_whitespace().collect();
            match section.as_str() {
                "Minimize" => lp.objective = lp.terms(&mut index, &words[1..]),
                "Subject To" => {
                    let n = words.len();
                    let terms = lp.terms(&mut index, &words[1..n - 2]);
                    lp.rows.push((terms, words[n - 2].to_string(), words[n - 1].parse().unwrap()));
                }
                "Bounds" => match words.as_slice() {
                    [name, "=", v] => {
                        let i = lp.var(&mut index, name);
                        lp.lo[i] = v.parse().unwrap();
                        lp.hi[i] = lp.lo[i];
                    }
                    [lo, "<=", name, "<=", hi] => {
                        let i = lp.var(&mut index, name);
                        lp.lo[i] = lo.parse().unwrap();
                        lp.hi[i] = hi.parse().unwrap();
                    }
                    other => panic!("bound {other:?}"),
                },
                "Generals" => {}
                "Binaries" => {
                    for name in words {
                        let i = lp.var(&mut index, name);
                        lp.hi[i] = 1;
                    }
                }
                other => panic!("section {other}"),
            }
        }
        lp
    }

    fn terms(&mut self, index: &mut HashMap<String, usize>, words: &[&str]) -> Vec<(i64, usize)> {
        let mut out = Vec::new();
        let mut sign = 1;
        let mut coef = None;
        for w in words {
            match *w {
                "+" => sign = 1,
                "-" => sign = -1,
                _ => match w.parse::<i64>() {
                    Ok(c) => coef = Some(c),
                    Err(_) => {
                        let i = self.var(index, w);
                        out.push((sign * coef.take().unwrap_or(1), i));
                        sign = 1;
                    }
                },
            }
        }
        out
    }

    fn feasible_ranges(&self, lo: &mut [i64], hi: &mut [i64]) -> bool {
        loop {
            let mut changed = false;
            for (terms, rel, rhs) in &self.rows {
                let min: i64 = terms.iter().map(|&t| act(lo, hi, 0, t)).sum();
                let max: i64 = terms.iter().map(|&t| act(lo, hi, 1, t)).sum();
                let le = rel != ">=";
                let ge = rel != "<=";
                if (le && min > *rhs) || (ge && max < *rhs) {
                    return false;
                }
                for &(c, v) in terms {
                    let own_min = act(lo, hi, 0, (c, v));
                    let own_max = act(lo, hi, 1, (c, v));
                    if le {
                        let room = rhs - (min - own_min);
                        if c > 0 {
                            let cap = room.div_euclid(c);
                            if cap < hi[v] {
                                hi[v] = cap;
                                changed = true;
                            }
                        } else {
                            let floor = -(room.div_euclid(-c));
                            if floor > lo[v] {
                                lo[v] = floor;
                                changed = true;
                            }
                        }
                    }
                    if ge {
                        let need = rhs - (max - own_max);
                        if c > 0 {
                            let floor = -((-need).div_euclid(c));
                            if floor > lo[v] {
                                lo[v] = floor;
                                changed = true;
                            }
                        } else {
                            let cap = (-need).div_euclid(-c);
                            if cap < hi[v] {
                                hi[v] = cap;
                                changed = true;
                            }
                        }
                    }
                    if lo[v] > hi[v] {
                        return false;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn minimize(&self) -> Option<i64> {
        let mut best = None;
        self.dfs(self.lo.clone(), self.hi.clone(), &mut best);
        best
    }

    fn dfs(&self, mut lo: Vec<i64>, mut hi: Vec<i64>, best: &mut Option<i64>) {
        if !self.feasible_ranges(&mut lo, &mut hi) {
            return;
        }
        let bound: i64 = self.objective.iter().map(|&(c, v)| if c > 0 { c * lo[v] } else { c * hi[v] }).sum();
        if best.is_some_and(|b| bound >= b) {
            return;
        }
        match (0..lo.len()).find(|&v| lo[v] < hi[v]) {
            None => *best = Some(bound),
            Some(v) => {
                for x in lo[v]..=hi[v] {
                    let (mut l, mut h) = (lo.clone(), hi.clone());
                    l[v] = x;
                    h[v] = x;
                    self.dfs(l, h, best);
                }
            }
        }
    }
}

#[test]
fn emitted_lp_has_the_oracle_optimum() {
    let mut compared = 0;
    for seed in 0..400 {
        let inst = small(seed);
        if inst.n_tas() * inst.n_courses() > 4 {
            continue;
        }
        let ir = build(&inst);
        let Ok(oracle) = brute_force(&ir, 200_000) else { continue };
        let lp = Lp::parse(&to_lp(&ir).text);
        assert_eq!(lp.names.len(), ir.variables.len());
        let found = lp.minimize();
        match oracle.status {
            Status::Optimal => assert_eq!(found, oracle.objective, "seed {seed}"),
            _ => assert_eq!(found, None, "seed {seed}"),
        }
        compared += 1;
        if compared == 25 {
            break;
        }
    }
    assert_eq!(compared, 25);
}
