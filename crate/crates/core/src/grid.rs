//! Index-based flood fills over a rectangle.

use crate::lattice::{Adjacency, Rect, SiteConfig, MATCHING_STEPS, PRIMAL_STEPS};

#[derive(Clone, Copy, Debug)]
pub(crate) struct Grid {
    pub rect: Rect,
    pub w: usize,
    pub h: usize,
}

impl Grid {
    pub fn new(rect: Rect) -> Grid {
        Grid { rect, w: rect.width(), h: rect.height() }
    }

    pub fn len(&self) -> usize {
        self.w * self.h
    }

    #[inline]
    pub fn for_each_neighbor(&self, i: usize, adj: Adjacency, mut f: impl FnMut(usize)) {
        let x = (i % self.w) as isize;
        let y = (i / self.w) as isize;
        let steps: &[(i32, i32)] = match adj {
            Adjacency::Primal => &PRIMAL_STEPS,
            Adjacency::Matching => &MATCHING_STEPS,
        };
        for &(dx, dy) in steps {
            let nx = x + dx as isize;
            let ny = y + dy as isize;
            if nx >= 0 && ny >= 0 && (nx as usize) < self.w && (ny as usize) < self.h {
                f(ny as usize * self.w + nx as usize);
            }
        }
    }

    /// Sites of `member` reachable from the member seeds.
    pub fn flood(
        &self,
        member: &[bool],
        adj: Adjacency,
        seeds: impl IntoIterator<Item = usize>,
    ) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = Vec::new();
        for s in seeds {
            if member[s] && !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(i) = stack.pop() {
            self.for_each_neighbor(i, adj, |j| {
                if member[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            });
        }
        seen
    }

    /// Whether a member path joins a seed to a target site.
    pub fn reaches(
        &self,
        member: &[bool],
        adj: Adjacency,
        seeds: impl IntoIterator<Item = usize>,
        target: impl Fn(usize) -> bool,
    ) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = Vec::new();
        for s in seeds {
            if member[s] && !seen[s] {
                if target(s) {
                    return true;
                }
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(i) = stack.pop() {
            let mut hit = false;
            self.for_each_neighbor(i, adj, |j| {
                if member[j] && !seen[j] {
                    hit |= target(j);
                    seen[j] = true;
                    stack.push(j);
                }
            });
            if hit {
                return true;
            }
        }
        false
    }

    pub fn left_column(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.h).map(move |y| y * self.w)
    }

    pub fn right_column(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.h).map(move |y| y * self.w + self.w - 1)
    }

    pub fn bottom_row(&self) -> impl Iterator<Item = usize> {
        0..self.w
    }
}

/// `mask[i]` is true when site `i` of `rect` has value `value` in `cfg`.
pub(crate) fn value_mask(cfg: &SiteConfig, rect: Rect, value: bool) -> Vec<bool> {
    if cfg.domain() == rect {
        return (0..rect.area()).map(|i| cfg.get_index(i) == value).collect();
    }
    rect.iter().map(|c| cfg.get(c) == value).collect()
}
