//! Built-in benchmark objectives. All are maximized and strictly positive on
//! their box, so every acquisition variant (including the log-transformed one)
//! applies.

use logei_core::bo::SearchSpace;

#[derive(Debug, Clone, Copy)]
pub struct Problem {
    pub name: &'static str,
    pub description: &'static str,
    pub lower: &'static [f64],
    pub upper: &'static [f64],
    /// Largest value on the box.
    pub optimum: f64,
    pub argmax: &'static [f64],
    pub objective: fn(&[f64]) -> f64,
}

impl Problem {
    pub fn space(&self) -> SearchSpace {
        SearchSpace::new(self.lower.to_vec(), self.upper.to_vec()).expect("built-in bounds are valid")
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }
}

pub const PROBLEMS: [Problem; 3] = [
    Problem {
        name: "quad1d",
        description: "1 − (x − 0.3)² on [0, 1]",
        lower: &[0.0],
        upper: &[1.0],
        optimum: 1.0,
        argmax: &[0.3],
        objective: quad1d,
    },
    Problem {
        name: "posbranin",
        description: "310 − Branin(x) on [−5, 10] × [0, 15]",
        lower: &[-5.0, 0.0],
        upper: &[10.0, 15.0],
        optimum: 310.0 - 0.397_887_357_729_738_1,
        argmax: &[std::f64::consts::PI, 2.275],
        objective: posbranin,
    },
    Problem {
        name: "hartmann3",
        description: "negated 3-D Hartmann function on [0, 1]³",
        lower: &[0.0, 0.0, 0.0],
        upper: &[1.0, 1.0, 1.0],
        optimum: 3.862_779_787_332_77,
        argmax: &[0.114_614, 0.555_649, 0.852_547],
        objective: neg_hartmann3,
    },
];

pub fn find(name: &str) -> Option<&'static Problem> {
    PROBLEMS.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    PROBLEMS.iter().map(|p| p.name).collect()
}

fn quad1d(x: &[f64]) -> f64 {
    1.0 - (x[0] - 0.3).powi(2)
}

fn posbranin(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let (a, b, c) = (1.0, 5.1 / (4.0 * PI * PI), 5.0 / PI);
    let (r, s, t) = (6.0, 10.0, 1.0 / (8.0 * PI));
    let branin = a * (x[1] - b * x[0] * x[0] + c * x[0] - r).powi(2) + s * (1.0 - t) * x[0].cos() + s;
    310.0 - branin
}

const HARTMANN3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const HARTMANN3_P: [[f64; 3]; 4] =
    [[0.3689, 0.1170, 0.2673], [0.4699, 0.4387, 0.7470], [0.1091, 0.8732, 0.5547], [0.0381, 0.5743, 0.8828]];

fn neg_hartmann3(x: &[f64]) -> f64 {
    (0..4)
        .map(|i| {
            let e: f64 = (0..3).map(|j| HARTMANN3_A[i][j] * (x[j] - HARTMANN3_P[i][j]).powi(2)).sum();
            HARTMANN3_ALPHA[i] * (-e).exp()
        })
        .sum()
}
