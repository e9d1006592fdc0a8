use crate::mesh::Domain;

/// Closed-form parts of a manufactured solution.
pub struct ExactSolution {
    pub omega: Box<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>,
    pub rot: Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    pub div: Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
}

/// An evaluable right-hand side with optional exact solution fields.
pub struct AnalyticField {
    pub name: &'static str,
    pub domain: Domain,
    pub f: Box<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>,
    pub exact: Option<ExactSolution>,
}

/// The study problems:
/// a smooth eigenfield on the unit square with vanishing normal trace, a
/// constant load on the L-shape (rates observed against a fine reference),
/// and an angular field around the hole of the holed square (nonzero
/// harmonic part).
pub fn manufactured_solutions() -> Vec<AnalyticField> {
    use std::f64::consts::PI;
    let square = AnalyticField {
        name: "square_eigen",
        domain: Domain::UnitSquare,
        f: Box::new(move |p: [f64; 2]| {
            let s = 2.0 * PI * PI;
            [
                s * (PI * p[0]).sin() * (PI * p[1]).cos(),
                s * (PI * p[0]).cos() * (PI * p[1]).sin(),
            ]
        }),
        exact: Some(ExactSolution {
            omega: Box::new(move |p: [f64; 2]| {
                [
                    (PI * p[0]).sin() * (PI * p[1]).cos(),
                    (PI * p[0]).cos() * (PI * p[1]).sin(),
                ]
            }),
            rot: Box::new(|_| 0.0),
            div: Box::new(move |p: [f64; 2]| 2.0 * PI * (PI * p[0]).cos() * (PI * p[1]).cos()),
        }),
    };
    let lshape = AnalyticField {
        name: "lshape_constant",
        domain: Domain::LShape,
        f: Box::new(|_| [1.0, 0.0]),
        exact: None,
    };
    let holed = AnalyticField {
        name: "holed_angular",
        domain: Domain::SquareWithHole,
        f: Box::new(|p: [f64; 2]| {
            let dx = p[0] - 1.5;
            let dy = p[1] - 1.5;
            let r2 = dx * dx + dy * dy;
            [-dy / r2, dx / r2]
        }),
        exact: None,
    };
    vec![square, lshape, holed]
}
