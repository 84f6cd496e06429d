//! Reference models used by tests, the acceptance run and the CLI docs.

use crate::dsl::{parse_model, ModelSpec};

pub const F0: &str = "name \"F0\"
dim 2
L2 = y1^2 + y2^2
zeta = (-x1, -x2)
domain x in [-2, 2] y in [0.5, 2]";

/// Euclidean plane in polar coordinates `(r, theta)`.
pub const F1: &str = "name \"F1\"
dim 2
L2 = y1^2 + x1^2*y2^2
zeta = (-x1, 0)
domain x1 in [1, 3] x2 in [-1, 1] y in [0.5, 2]";

/// Randers `L = |y| + 0.1 y1`. The y-box keeps `y1 > 0` and lets `y2` change sign.
pub const F2: &str = "name \"F2\"
dim 2
L2 = (sqrt(y1^2 + y2^2) + 0.1*y1)^2
domain x in [-1, 1] y1 in [0.5, 2] y2 in [-1, 1]";

pub const F2_3D: &str = "name \"F2-3d\"
dim 3
L2 = (sqrt(y1^2 + y2^2 + y3^2) + 0.1*y1)^2
domain x in [-1, 1] y1 in [0.5, 2] y2 in [-1, 1] y3 in [-1, 1]";

/// Randers with position-dependent data.
pub const F2X: &str = "name \"F2x\"
dim 2
L2 = (sqrt((1 + 0.1*x1^2)*y1^2 + y2^2) + 0.1*x2*y1 + 0.05*y2)^2
domain x in [-1, 1] y1 in [0.5, 2] y2 in [-1, 1]";

pub const F0_FLIP: &str = "name \"F0-flip\"
dim 2
L2 = y1^2 + y2^2
zeta = (x1, x2)
domain x in [-2, 2] y in [0.5, 2]";

/// `zeta` is off by a multiple of `x2`, so it is not concurrent.
pub const F0_DEFECT: &str = "name \"F0-defect\"
dim 2
L2 = y1^2 + y2^2
zeta = (-x1, -1.1*x2)
domain x in [-2, 2] y in [0.5, 2]";

pub const F0_3D: &str = "name \"F0-3d\"
dim 3
L2 = y1^2 + y2^2 + y3^2
zeta = (-x1, -x2, -x3)
domain x in [-2, 2] y in [0.5, 2]";

/// Euclidean space in cylindrical coordinates `(r, theta, z)`.
pub const F1_3D: &str = "name \"F1-3d\"
dim 3
L2 = y1^2 + x1^2*y2^2 + y3^2
zeta = (-x1, 0, -x3)
domain x1 in [1, 3] x2 in [-1, 1] x3 in [-1, 1] y in [0.5, 2]";

/// Curved Riemannian cone `dr^2 + r^2 h` over a non-round surface.
pub const RIEMANNIAN_CONE: &str = "name \"riemannian-cone\"
dim 3
L2 = y1^2 + x1^2*(y2^2 + (1 + 0.5*x2^2)*y3^2)
zeta = (-x1, 0, 0)
domain x1 in [1, 2] x2 in [-1, 1] x3 in [-1, 1] y in [0.5, 2]";

/// Cone over a Randers surface: non-Riemannian with a concurrent field.
pub const FINSLER_CONE: &str = "name \"finsler-cone\"
dim 3
L2 = y1^2 + x1^2*(sqrt(y2^2 + y3^2) + 0.2*y2)^2
zeta = (-x1, 0, 0)
domain x1 in [1, 2] x2 in [-1, 1] x3 in [-1, 1] y1 in [0.5, 2] y2 in [0.5, 2] y3 in [-1, 1]";

/// Conformally flat metric `(1 + |x|^2/4)^-2 delta`.
pub const SPHERE: &str = "name \"sphere\"
dim 2
L2 = (y1^2 + y2^2) / (1 + 0.25*(x1^2 + x2^2))^2
domain x in [-1, 1] y in [0.5, 2]";

pub const SPHERE_3D: &str = "name \"sphere-3d\"
dim 3
L2 = (y1^2 + y2^2 + y3^2) / (1 + 0.25*(x1^2 + x2^2 + x3^2))^2
domain x in [-1, 1] y in [0.5, 2]";

/// Parses one of the constants above.
pub fn load(src: &str) -> ModelSpec {
    parse_model(src).unwrap_or_else(|e| panic!("fixture failed to parse: {e}"))
}

pub fn f0() -> ModelSpec {
    load(F0)
}

pub fn f1() -> ModelSpec {
    load(F1)
}

pub fn f2() -> ModelSpec {
    load(F2)
}

/// Named fixtures for the CLI.
pub fn by_name(name: &str) -> Option<ModelSpec> {
    let src = match name.to_ascii_lowercase().as_str() {
        "f0" => F0,
        "f1" => F1,
        "f2" => F2,
        "f2-3d" => F2_3D,
        "f2x" => F2X,
        "f0-flip" => F0_FLIP,
        "f0-defect" => F0_DEFECT,
        "f0-3d" => F0_3D,
        "f1-3d" => F1_3D,
        "riemannian-cone" => RIEMANNIAN_CONE,
        "finsler-cone" => FINSLER_CONE,
        "sphere" => SPHERE,
        "sphere-3d" => SPHERE_3D,
        _ => return None,
    };
    Some(load(src))
}

pub const NAMES: [&str; 13] = [
    "f0",
    "f1",
    "f2",
    "f2-3d",
    "f2x",
    "f0-flip",
    "f0-defect",
    "f0-3d",
    "f1-3d",
    "riemannian-cone",
    "finsler-cone",
    "sphere",
    "sphere-3d",
];
