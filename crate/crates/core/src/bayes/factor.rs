//! Dense factors over discrete variables.

use super::BayesNet;

/// A table over `vars` (ascending node indices), last variable fastest.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    /// The CPT of node `i` as a factor over the node and its parents.
    pub fn from_cpt(net: &BayesNet, i: usize) -> Self {
        let mut vars: Vec<usize> = net.parent_indices(i).to_vec();
        vars.push(i);
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&v| net.card(v)).collect();
        let size = cards.iter().product();
        let rows = &net.cpts()[i].rows;
        let mut values = Vec::with_capacity(size);
        let mut states = vec![0usize; net.len()];
        let mut odometer = vec![0usize; vars.len()];
        for _ in 0..size {
            for (k, &v) in vars.iter().enumerate() {
                states[v] = odometer[k];
            }
            values.push(rows[net.row_index(i, &states)][states[i]]);
            advance(&mut odometer, &cards);
        }
        Self { vars, cards, values }
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for k in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    /// Fix `var` to `state` and drop it.
    pub fn reduce(&self, var: usize, state: usize) -> Self {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let outer: usize = self.cards[..pos].iter().product();
        let inner = strides[pos];
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = o * self.cards[pos] * inner + state * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        Self { vars, cards, values }
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| match self.vars.binary_search(v) {
                Ok(k) => self.cards[k],
                Err(_) => other.cards[other.vars.binary_search(v).unwrap()],
            })
            .collect();
        let project = |f: &Self| -> Vec<usize> {
            let strides = f.strides();
            vars.iter()
                .map(|v| f.vars.binary_search(v).map_or(0, |k| strides[k]))
                .collect()
        };
        let sa = project(self);
        let sb = project(other);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut odometer = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // Step the odometer and the two linear offsets together.
            for k in (0..vars.len()).rev() {
                odometer[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if odometer[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                odometer[k] = 0;
            }
        }
        Self { vars, cards, values }
    }

    pub fn sum_out(&self, var: usize) -> Self {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let outer: usize = self.cards[..pos].iter().product();
        let inner = strides[pos];
        let card = self.cards[pos];
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for j in 0..inner {
                    values[o * inner + j] += self.values[base + j];
                }
            }
        }
        Self { vars, cards, values }
    }
}

pub(crate) fn advance(odometer: &mut [usize], cards: &[usize]) {
    for k in (0..odometer.len()).rev() {
        odometer[k] += 1;
        if odometer[k] < cards[k] {
            return;
        }
        odometer[k] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(vars: &[usize], cards: &[usize], values: &[f64]) -> Factor {
        Factor {
            vars: vars.to_vec(),
            cards: cards.to_vec(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn product_aligns_shared_variables() {
        let a = f(&[0, 1], &[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = f(&[1, 2], &[2, 3], &[1.0, 10.0, 100.0, 2.0, 20.0, 200.0]);
        let p = a.product(&b);
        assert_eq!(p.vars, vec![0, 1, 2]);
        // p[x0, x1, x2] = a[x0, x1] * b[x1, x2]
        for x0 in 0..2 {
            for x1 in 0..2 {
                for x2 in 0..3 {
                    let got = p.values[x0 * 6 + x1 * 3 + x2];
                    assert_eq!(got, a.values[x0 * 2 + x1] * b.values[x1 * 3 + x2]);
                }
            }
        }
    }

    #[test]
    fn reduce_and_sum_out() {
        let a = f(&[0, 1], &[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.reduce(0, 1).values, vec![4.0, 5.0, 6.0]);
        assert_eq!(a.reduce(1, 2).values, vec![3.0, 6.0]);
        assert_eq!(a.sum_out(0).values, vec![5.0, 7.0, 9.0]);
        assert_eq!(a.sum_out(1).values, vec![6.0, 15.0]);
        assert_eq!(a.sum_out(1).sum_out(0).values, vec![21.0]);
    }
}
