// SPDX-License-Identifier: Apache-2.0
//! Derivators: nondecreasing, left-continuous functions `g` on `[0, T]` made of
//! a piecewise density plus finitely many jumps.
//!
//! `g(t) = g0 + ∫_0^t ρ + Σ_{t_j < t} d_j`. Constancy intervals are derived
//! from pieces declared with [`Density::Zero`]; a density that merely happens
//! to vanish is not treated as constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density of the absolutely continuous part on one piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Density {
    Zero,
    Const { value: f64 },
    /// Polynomial in absolute time, `coeffs[k]` multiplies `t^k`.
    Poly { coeffs: Vec<f64> },
}

impl Density {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Const { value } => *value,
            Density::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    /// `∫_a^b ρ(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Const { value } => value * (b - a),
            Density::Poly { coeffs } => {
                let anti = |t: f64| {
                    coeffs
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (k, c)| acc * t + c / (k as f64 + 1.0))
                        * t
                };
                anti(b) - anti(a)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Density::Zero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub density: Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub d: f64,
}

/// Classification of a point of `[0, T]` with respect to `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointClass {
    Regular,
    Jump(f64),
    Constancy(f64, f64),
    NgMinus,
    NgPlus,
}

/// JSON form of a derivator, field names as accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivatorConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default)]
    pub g0: f64,
    pub pieces: Vec<Piece>,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivator {
    t_end: f64,
    g0: f64,
    pieces: Vec<Piece>,
    jumps: Vec<Jump>,
    constancy: Vec<(f64, f64)>,
    // Continuous part of g accumulated up to the start of each piece.
    piece_base: Vec<f64>,
    structural: Vec<f64>,
}

impl Derivator {
    /// Builds a derivator without checking the standing hypotheses; see
    /// [`Derivator::validate`] and [`Derivator::checked`].
    pub fn new(t_end: f64, g0: f64, pieces: Vec<Piece>, jumps: Vec<Jump>) -> Self {
        let mut piece_base = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            piece_base.push(acc);
            acc += p.density.integral(p.from, p.to);
        }

        let mut constancy: Vec<(f64, f64)> = Vec::new();
        for p in pieces.iter().filter(|p| p.density.is_zero()) {
            match constancy.last_mut() {
                Some(last) if last.1 == p.from => last.1 = p.to,
                _ => constancy.push((p.from, p.to)),
            }
        }
        // A jump strictly inside a zero stretch splits it.
        let mut split = Vec::new();
        for (a, b) in constancy {
            let mut start = a;
            for j in jumps.iter().filter(|j| j.t > a && j.t < b) {
                split.push((start, j.t));
                start = j.t;
            }
            split.push((start, b));
        }
        split.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut structural = vec![0.0, t_end];
        structural.extend(jumps.iter().map(|j| j.t).filter(|t| *t >= 0.0 && *t <= t_end));
        for p in &pieces {
            structural.push(p.from);
            structural.push(p.to);
        }
        for (a, b) in &split {
            structural.push(*a);
            structural.push(*b);
        }
        structural.retain(|t| *t >= 0.0 && *t <= t_end);
        structural.sort_by(f64::total_cmp);
        structural.dedup();

        Derivator { t_end, g0, pieces, jumps, constancy: split, piece_base, structural }
    }

    /// Builds and validates in one step.
    pub fn checked(t_end: f64, g0: f64, pieces: Vec<Piece>, jumps: Vec<Jump>) -> Result<Self> {
        let d = Self::new(t_end, g0, pieces, jumps);
        let v = d.validate();
        if v.is_empty() {
            Ok(d)
        } else {
            Err(Error::InvalidDerivator(v))
        }
    }

    pub fn from_config(cfg: &DerivatorConfig) -> Result<Self> {
        Self::checked(cfg.t_end, cfg.g0, cfg.pieces.clone(), cfg.jumps.clone())
    }

    pub fn to_config(&self) -> DerivatorConfig {
        DerivatorConfig {
            t_end: self.t_end,
            g0: self.g0,
            pieces: self.pieces.clone(),
            jumps: self.jumps.clone(),
        }
    }

    /// `g(t) = t` on `[0, T]`.
    pub fn identity(t_end: f64) -> Self {
        Self::with_jumps(t_end, &[])
    }

    /// Unit density on `[0, T]` plus the given `(t_j, d_j)` jumps.
    pub fn with_jumps(t_end: f64, jumps: &[(f64, f64)]) -> Self {
        Self::new(
            t_end,
            0.0,
            vec![Piece { from: 0.0, to: t_end, density: Density::Const { value: 1.0 } }],
            jumps.iter().map(|&(t, d)| Jump { t, d }).collect(),
        )
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Components `(a_n, b_n)` of the constancy set `C_g`.
    pub fn constancy(&self) -> &[(f64, f64)] {
        &self.constancy
    }

    /// Sorted structural points: 0, T, jumps, piece boundaries and
    /// constancy endpoints.
    pub fn structural_points(&self) -> &[f64] {
        &self.structural
    }

    pub fn contains(&self, t: f64) -> bool {
        (0.0..=self.t_end).contains(&t)
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain { t, t_end: self.t_end })
        }
    }

    fn piece_index(&self, t: f64) -> Option<usize> {
        // Pieces are half-open [from, to); T belongs to the last one.
        let n = self.pieces.len();
        self.pieces
            .iter()
            .position(|p| t >= p.from && t < p.to)
            .or_else(|| (n > 0 && t == self.pieces[n - 1].to).then_some(n - 1))
    }

    /// Density `ρ(t)` (zero outside every piece).
    pub fn density(&self, t: f64) -> f64 {
        self.piece_index(t).map_or(0.0, |i| self.pieces[i].density.eval(t))
    }

    /// Continuous part `∫_0^t ρ`.
    pub fn g_continuous(&self, t: f64) -> f64 {
        match self.piece_index(t) {
            Some(i) => {
                let p = &self.pieces[i];
                self.piece_base[i] + p.density.integral(p.from, t)
            }
            None if t <= 0.0 => 0.0,
            None => self
                .pieces
                .iter()
                .zip(&self.piece_base)
                .filter(|(p, _)| p.from < t)
                .map(|(p, base)| base + p.density.integral(p.from, t.min(p.to)))
                .fold(0.0, f64::max),
        }
    }

    /// `Σ_{t_j < t} d_j`.
    pub fn jump_sum_before(&self, t: f64) -> f64 {
        self.jumps.iter().filter(|j| j.t < t).map(|j| j.d).sum()
    }

    /// `g(t)` without the domain check.
    pub fn g(&self, t: f64) -> f64 {
        self.g0 + self.g_continuous(t) + self.jump_sum_before(t)
    }

    /// `g(t+)` without the domain check.
    pub fn g_right(&self, t: f64) -> f64 {
        self.g(t) + self.jump(t)
    }

    pub fn eval_g(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.g(t))
    }

    pub fn eval_g_right(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.g_right(t))
    }

    /// `Δg(t)`; membership in `D_g` is decided by exact comparison.
    pub fn jump(&self, t: f64) -> f64 {
        self.jumps.iter().find(|j| j.t == t).map_or(0.0, |j| j.d)
    }

    pub fn is_jump(&self, t: f64) -> bool {
        self.jumps.iter().any(|j| j.t == t)
    }

    fn constancy_containing(&self, t: f64) -> Option<(f64, f64)> {
        self.constancy.iter().copied().find(|&(a, b)| t > a && t < b)
    }

    /// `t*`: the right endpoint of the constancy component containing `t`,
    /// or `t` itself.
    pub fn star(&self, t: f64) -> f64 {
        self.constancy_containing(t).map_or(t, |(_, b)| b)
    }

    pub fn classify(&self, t: f64) -> PointClass {
        let d = self.jump(t);
        if d > 0.0 {
            return PointClass::Jump(d);
        }
        if let Some((a, b)) = self.constancy_containing(t) {
            return PointClass::Constancy(a, b);
        }
        if self.constancy.iter().any(|&(a, _)| a == t) {
            return PointClass::NgMinus;
        }
        if self.constancy.iter().any(|&(_, b)| b == t) {
            return PointClass::NgPlus;
        }
        PointClass::Regular
    }

    /// Lists every violated invariant or standing hypothesis; empty when the
    /// derivator is admissible.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let t_end = self.t_end;
        if !(t_end.is_finite() && t_end > 0.0) {
            v.push(format!("T must be positive and finite, got {t_end}"));
            return v;
        }
        if !self.g0.is_finite() {
            v.push("g0 must be finite".to_string());
        }

        if self.pieces.is_empty() {
            v.push("no density pieces".to_string());
        } else {
            if self.pieces[0].from != 0.0 {
                v.push(format!("pieces must start at 0, first starts at {}", self.pieces[0].from));
            }
            let last = self.pieces.last().unwrap().to;
            if last != t_end {
                v.push(format!("pieces must end at T = {t_end}, last ends at {last}"));
            }
            for w in self.pieces.windows(2) {
                if w[0].to != w[1].from {
                    v.push(format!("pieces do not tile: gap or overlap at {} / {}", w[0].to, w[1].from));
                }
            }
        }
        for p in &self.pieces {
            if !(p.from < p.to) || !p.from.is_finite() || !p.to.is_finite() {
                v.push(format!("empty or malformed piece [{}, {})", p.from, p.to));
                continue;
            }
            match &p.density {
                Density::Zero => {}
                Density::Const { value } => {
                    if !value.is_finite() || *value < 0.0 {
                        v.push(format!("negative density {} on [{}, {})", value, p.from, p.to));
                    }
                }
                Density::Poly { coeffs } => {
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        v.push(format!("non-finite polynomial coefficient on [{}, {})", p.from, p.to));
                    } else {
                        let k = 256;
                        let neg = (0..=k)
                            .map(|i| p.from + (p.to - p.from) * i as f64 / k as f64)
                            .find(|&s| p.density.eval(s) < 0.0);
                        if let Some(s) = neg {
                            v.push(format!("negative density at t = {s} on [{}, {})", p.from, p.to));
                        }
                    }
                }
            }
        }

        for j in &self.jumps {
            if !(j.d > 0.0) || !j.d.is_finite() {
                v.push(format!("jump at t = {} has non-positive size {}", j.t, j.d));
            }
            if j.t == 0.0 {
                v.push("0 ∈ D_g".to_string());
            } else if j.t == t_end {
                v.push("T ∈ D_g".to_string());
            } else if !(j.t > 0.0 && j.t < t_end) {
                v.push(format!("jump at t = {} outside (0, T)", j.t));
            }
        }
        for w in self.jumps.windows(2) {
            if !(w[0].t < w[1].t) {
                v.push(format!("jumps not strictly increasing at t = {}", w[1].t));
            }
        }

        for &(a, b) in &self.constancy {
            if a == 0.0 && !self.is_jump(0.0) {
                v.push("0 ∈ N_g⁻".to_string());
            }
            if b == t_end {
                v.push("T ∈ N_g⁺ ∪ C_g".to_string());
            }
        }
        v
    }

    /// Partition of `[0, T]` containing every structural point, with each
    /// structural segment split evenly into cells no wider than `T / n`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let h = self.t_end / n as f64;
        let mut out = Vec::with_capacity(n + self.structural.len() + 1);
        out.push(self.structural[0]);
        for w in self.structural.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = ((b - a) / h).ceil().max(1.0) as usize;
            for k in 1..m {
                out.push(a + (b - a) * k as f64 / m as f64);
            }
            out.push(b);
        }
        out
    }

    /// Distance from `t` to the nearest structural point other than `t`.
    pub fn clearance(&self, t: f64) -> f64 {
        self.structural
            .iter()
            .filter(|&&s| s != t)
            .map(|s| (s - t).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance `h` such that `(t, t + h)` contains no structural point.
    pub fn clearance_right(&self, t: f64) -> f64 {
        self.structural.iter().filter(|&&s| s > t).map(|s| s - t).fold(self.t_end - t, f64::min)
    }

    /// Largest distance `h` such that `(t - h, t)` contains no structural point.
    pub fn clearance_left(&self, t: f64) -> f64 {
        self.structural.iter().filter(|&&s| s < t).map(|s| t - s).fold(t, f64::min)
    }

    /// True when the density is the same smooth expression on both sides of `t`.
    pub fn smooth_at(&self, t: f64) -> bool {
        !self.structural.contains(&t)
    }
}
