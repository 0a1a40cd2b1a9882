//! Manufactured solutions built from separable trigonometric terms.
//!
//! Every field is a short sum of products of `1`, `sin(ωs)` and `cos(ωs)`
//! factors in `(t, x, y, z)`, so derivatives, sources and charge densities
//! are computed symbolically and stay exact.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxwell::{scalar_field, Component, MaxwellData, ScalarField, SpaceTimeBox, WaveProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fun1D {
    One,
    Sin(f64),
    Cos(f64),
}

impl Fun1D {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Fun1D::One => 1.0,
            Fun1D::Sin(w) => (w * s).sin(),
            Fun1D::Cos(w) => (w * s).cos(),
        }
    }

    /// `d/ds` as a coefficient and a factor; `None` when it vanishes.
    pub fn deriv(self) -> Option<(f64, Fun1D)> {
        match self {
            Fun1D::One => None,
            Fun1D::Sin(w) => Some((w, Fun1D::Cos(w))),
            Fun1D::Cos(w) => Some((-w, Fun1D::Sin(w))),
        }
    }
}

/// `coef · f_t(t) f_x(x) f_y(y) f_z(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SepTerm {
    pub coef: f64,
    pub f: [Fun1D; 4],
}

impl SepTerm {
    pub fn eval(&self, p: [f64; 4]) -> f64 {
        self.coef * (0..4).map(|a| self.f[a].eval(p[a])).product::<f64>()
    }
}

/// Finite sum of separable terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SepField {
    pub terms: Vec<SepTerm>,
}

impl SepField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coef: f64, f: [Fun1D; 4]) -> Self {
        Self { terms: vec![SepTerm { coef, f }] }
    }

    pub fn eval(&self, p: [f64; 4]) -> f64 {
        self.terms.iter().map(|t| t.eval(p)).sum()
    }

    pub fn deriv(&self, axis: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let (c, g) = t.f[axis].deriv()?;
                let mut f = t.f;
                f[axis] = g;
                Some(SepTerm { coef: t.coef * c, f })
            })
            .collect();
        Self { terms }
    }

    pub fn plus(&self, other: &SepField) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| SepTerm { coef: t.coef * alpha, f: t.f }).collect() }
    }

    /// Number of separable terms, an upper bound on every TT rank.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn to_scalar_field(&self) -> ScalarField {
        let me = self.clone();
        scalar_field(move |p| me.eval(p))
    }
}

/// A closed-form Maxwell solution with the data needed to pose it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub name: String,
    pub domain: SpaceTimeBox,
    pub e: [SepField; 3],
    pub b: [SepField; 3],
}

impl ManufacturedCase {
    /// `ε₀ ∇·E`.
    pub fn rho(&self, eps0: f64) -> SepField {
        (0..3).fold(SepField::zero(), |acc, k| acc.plus(&self.e[k].deriv(k + 1))).scaled(eps0)
    }

    /// `∂_tt E_i − c² ΔE_i`.
    pub fn source(&self, c: Component, speed: f64) -> SepField {
        let e = &self.e[c.index()];
        let lap = (1..4).fold(SepField::zero(), |acc, a| acc.plus(&e.deriv(a).deriv(a)));
        e.deriv(0).deriv(0).plus(&lap.scaled(-speed * speed))
    }

    /// Largest separable rank over the six field components.
    pub fn nominal_rank(&self) -> usize {
        self.e.iter().chain(self.b.iter()).map(SepField::rank).max().unwrap_or(0)
    }

    pub fn wave_problem(&self, c: Component, speed: f64, eps0: f64) -> WaveProblem {
        let e = &self.e[c.index()];
        WaveProblem {
            component: c,
            c: speed,
            eps0,
            source: self.source(c, speed).to_scalar_field(),
            boundary: e.to_scalar_field(),
            boundary_t: e.deriv(0).to_scalar_field(),
            initial: e.to_scalar_field(),
            initial_t: e.deriv(0).to_scalar_field(),
        }
    }

    pub fn maxwell_data(&self, speed: f64, eps0: f64) -> MaxwellData {
        MaxwellData {
            e: Component::ALL.map(|c| self.wave_problem(c, speed, eps0)),
            b_initial: [0, 1, 2].map(|k| self.b[k].to_scalar_field()),
        }
    }

    pub fn exact_e(&self, c: Component) -> ScalarField {
        self.e[c.index()].to_scalar_field()
    }

    pub fn exact_b(&self, c: Component) -> ScalarField {
        self.b[c.index()].to_scalar_field()
    }
}

fn prod(coef: f64, f: [Fun1D; 4]) -> SepField {
    SepField::term(coef, f)
}

use Fun1D::{Cos, One, Sin};

fn ex1() -> ManufacturedCase {
    let (p, q) = (PI, 2.0 * PI);
    ManufacturedCase {
        name: "ex1".into(),
        domain: SpaceTimeBox::unit(),
        e: [SepField::zero(), prod(1.0, [Sin(q), Sin(q), Sin(q), One]), prod(1.0, [Cos(p), Sin(p), Sin(p), One])],
        b: [
            prod(-1.0, [Sin(p), Sin(p), Cos(p), One]),
            prod(1.0, [Sin(p), Cos(p), Sin(p), One]),
            prod(1.0, [Cos(q), Cos(q), Sin(q), One]),
        ],
    }
}

fn ex2() -> ManufacturedCase {
    let (p, q) = (PI, 2.0 * PI);
    ManufacturedCase {
        name: "ex2".into(),
        domain: SpaceTimeBox::new((0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)),
        e: [SepField::zero(), prod(1.0, [Sin(q), Sin(q), Sin(q), Sin(q)]), prod(1.0, [Cos(p), Sin(p), Sin(p), Sin(p)])],
        b: [
            prod(-1.0, [Sin(p), Sin(p), Cos(p), Sin(p)]).plus(&prod(-1.0, [Cos(q), Sin(q), Sin(q), Cos(q)])),
            prod(1.0, [Sin(p), Cos(p), Sin(p), Sin(p)]),
            prod(1.0, [Cos(q), Cos(q), Sin(q), Sin(q)]),
        ],
    }
}

fn ex3() -> ManufacturedCase {
    let sum = |coef: f64, f: &dyn Fn(f64) -> [Fun1D; 4]| {
        (1..=3).fold(SepField::zero(), |acc, k| acc.plus(&prod(coef, f(k as f64 * PI))))
    };
    ManufacturedCase {
        name: "ex3".into(),
        domain: SpaceTimeBox::unit(),
        e: [SepField::zero(), SepField::zero(), sum(1.0, &|w| [Cos(w), Sin(w), Sin(w), One])],
        b: [
            sum(-1.0, &|w| [Sin(w), Sin(w), Cos(w), One]),
            sum(1.0, &|w| [Sin(w), Cos(w), Sin(w), One]),
            SepField::zero(),
        ],
    }
}

/// Names accepted by [`builtin_case`].
pub const CASE_NAMES: [&str; 3] = ["ex1", "ex2", "ex3"];

pub fn builtin_cases() -> Vec<ManufacturedCase> {
    vec![ex1(), ex2(), ex3()]
}

pub fn builtin_case(name: &str) -> Result<ManufacturedCase> {
    builtin_cases()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown case {name:?}, expected one of {CASE_NAMES:?}")))
}
