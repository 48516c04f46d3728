//! Browser bindings: Robin conditions at chosen data, the normal-form
//! transform at a chosen amplitude point, and a small comparison run.

use msbc_core::boundary::{BoundaryData, RobinBC, Signal};
use msbc_core::experiment::run::run;
use msbc_core::experiment::{derive, BoundarySet, Mode, RunOutput, Scenario};
use msbc_core::scalar::rational_to_f64;
use msbc_core::series::TruncatedSeries;
use msbc_core::solvers::{interior_error, MacroState, Tolerances};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a run well under a second.
pub const MAX_INTERVALS: usize = 600;

#[wasm_bindgen]
pub struct Demo {
    bcs: BoundarySet,
    transform: Vec<TruncatedSeries<f64>>,
}

/// Mean temperature profiles at one time, plus interior errors.
#[wasm_bindgen]
pub struct Profiles {
    xs: Vec<f64>,
    micro: Vec<f64>,
    dirichlet: Vec<f64>,
    robin: Vec<f64>,
    linear: Vec<f64>,
    errors: Vec<f64>,
}

#[wasm_bindgen]
impl Profiles {
    #[wasm_bindgen(getter)]
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn micro(&self) -> Vec<f64> {
        self.micro.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn dirichlet(&self) -> Vec<f64> {
        self.dirichlet.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn robin(&self) -> Vec<f64> {
        self.robin.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn linear(&self) -> Vec<f64> {
        self.linear.clone()
    }
    /// `Linf_mean` over [5, 25] for dirichlet, robin, linear.
    #[wasm_bindgen(getter)]
    pub fn errors(&self) -> Vec<f64> {
        self.errors.clone()
    }
}

impl Demo {
    pub fn build(order: u32) -> Result<Demo, String> {
        let d = derive(order).map_err(|e| e.to_string())?;
        let transform = d.transform.components().iter().map(|c| c.map_coeffs(rational_to_f64)).collect();
        Ok(Demo { bcs: BoundarySet::from_derivation(&d), transform })
    }

    fn pair(&self, printed: bool) -> &(RobinBC, RobinBC) {
        if printed {
            &self.bcs.printed
        } else {
            &self.bcs.derived
        }
    }

    pub fn profiles_at(&self, t: f64, intervals: usize, a0: f64, bl: f64) -> Result<Profiles, String> {
        if !(t > 0.0 && t <= 40.0) {
            return Err(format!("time must lie in (0, 40], got {t}"));
        }
        if intervals > MAX_INTERVALS {
            return Err(format!("at most {MAX_INTERVALS} intervals"));
        }
        let mut s = Scenario::heated_inlet();
        s.t_end = t;
        s.snapshots = vec![t];
        s.intervals = intervals;
        s.tolerances = Tolerances { rtol: 1e-6, atol: 1e-6 };
        s.data = BoundaryData { a0: Signal::TanhSquared(a0), b0: Signal::Constant(0.0), al: Signal::Constant(0.0), bl: Signal::Constant(bl) };
        s.validate().map_err(|e| e.to_string())?;
        let grid = s.grid().map_err(|e| e.to_string())?;
        let micro = match run(&s, Mode::Micro, &self.bcs).map_err(|e| e.to_string())? {
            RunOutput::Micro(m) => m,
            RunOutput::Macro(_) => unreachable!("micro mode"),
        };
        let m = micro.last();
        let mut macros: Vec<MacroState> = Vec::new();
        let mut errors = Vec::new();
        for mode in [Mode::MacroDirichlet, Mode::MacroRobin, Mode::MacroRobinLinear] {
            let RunOutput::Macro(tr) = run(&s, mode, &self.bcs).map_err(|e| format!("{}: {e}", mode.name()))? else {
                unreachable!("macro mode")
            };
            let last = tr.last().clone();
            errors.push(interior_error(m, &last, &grid, s.window).map_err(|e| e.to_string())?.linf_mean);
            macros.push(last);
        }
        let mut it = macros.into_iter().map(|s| s.c);
        Ok(Profiles {
            xs: grid.xs(),
            micro: m.mean(),
            dirichlet: it.next().unwrap(),
            robin: it.next().unwrap(),
            linear: it.next().unwrap(),
            errors,
        })
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(order: u32) -> Result<Demo, JsError> {
        Demo::build(order).map_err(|e| JsError::new(&e))
    }

    /// `[P, Q, R]` of `C - P Cx - Q Cx^2 = R` at the given boundary data
    /// (`a0, b0` on the left, `aL, bL` on the right).
    pub fn robin(&self, right: bool, printed: bool, first: f64, second: f64) -> Vec<f64> {
        let pair = self.pair(printed);
        let bc = if right { &pair.1 } else { &pair.0 };
        let n = bc.at(first, second);
        vec![n.p, n.q, n.r]
    }

    pub fn robin_text(&self, printed: bool) -> String {
        let (l, r) = self.pair(printed);
        format!("{l}\n{r}")
    }

    /// `(a, b, a', b')` at amplitudes `(s1, s2, s3, s4)`.
    pub fn transform(&self, s1: f64, s2: f64, s3: f64, s4: f64) -> Vec<f64> {
        self.transform.iter().map(|c| c.evaluate(&[s1, s2, s3, s4])).collect()
    }

    pub fn profiles(&self, t: f64, intervals: usize, a0: f64, bl: f64) -> Result<Profiles, JsError> {
        self.profiles_at(t, intervals, a0, bl).map_err(|e| JsError::new(&e))
    }
}
