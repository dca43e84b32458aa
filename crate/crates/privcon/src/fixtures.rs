//! Reference networks and published vectors used as test oracles and CLI demos.
//!
//! Matrices are written out entry by entry rather than generated, so that
//! comparing a construction against them is an independent check.

use crate::exactla::{parse_decimal, parse_rational, ratio, Matrix, Rational, RationalMatrix};
use crate::netgraph::WeightedDigraph;

fn parse_rows(text: &str) -> RationalMatrix {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(|t| parse_rational(t).expect("fixture literal")).collect())
        .collect();
    Matrix::from_rows(rows).expect("rectangular fixture")
}

fn parse_list(text: &str) -> Vec<Rational> {
    text.split_whitespace().map(|t| parse_rational(t).expect("fixture literal")).collect()
}

fn parse_floats(text: &str) -> Vec<f64> {
    text.split_whitespace().map(|t| t.parse().expect("fixture float")).collect()
}

/// Bidirected triangle with every weight 1/2.
pub fn triangle() -> WeightedDigraph {
    WeightedDigraph::bidirected(3, &[(0, 1), (1, 2), (0, 2)], ratio(1, 2)).expect("valid")
}

pub fn triangle_x0() -> Vec<Rational> {
    vec![ratio(1, 2), ratio(1, 3), ratio(1, 5)]
}

/// Two agents listening to each other with weight 1/2.
pub fn two_agents() -> WeightedDigraph {
    WeightedDigraph::bidirected(2, &[(0, 1)], ratio(1, 2)).expect("valid")
}

/// 4N construction on the triangle.
pub fn triangle_4n() -> RationalMatrix {
    parse_rows(
        "
        0   1/5 1/5 2/5 0 1/5 0   0 0   0   0 0
        1/5 0   1/5 0   0 0   2/5 0 1/5 0   0 0
        1/5 1/5 0   0   0 0   0   0 0   2/5 0 1/5
        1   0   0   0   0 0   0   0 0   0   0 0
        1   0   0   0   0 0   0   0 0   0   0 0
        0   0   0   0   1 0   0   0 0   0   0 0
        0   1   0   0   0 0   0   0 0   0   0 0
        0   1   0   0   0 0   0   0 0   0   0 0
        0   0   0   0   0 0   0   1 0   0   0 0
        0   0   1   0   0 0   0   0 0   0   0 0
        0   0   1   0   0 0   0   0 0   0   0 0
        0   0   0   0   0 0   0   0 0   0   1 0
        ",
    )
}

pub fn triangle_4n_left() -> Vec<Rational> {
    parse_list("5/27 5/27 5/27 2/27 1/27 1/27 2/27 1/27 1/27 2/27 1/27 1/27")
}

/// Pre-rescale gadget state of the 4N encoding for `triangle_x0`.
pub fn triangle_4n_raw_state() -> Vec<f64> {
    parse_floats("0 0 0 0.684605 0.596201 0.719194 0.347897 0.726167 0.25927 0.0304891 0.0956126 0.673898")
}

pub fn triangle_4n_state() -> Vec<f64> {
    parse_floats("0 0 0 0.770181 1.34145 1.61819 0.391384 1.63388 0.583356 0.0343002 0.215128 1.51627")
}

/// 5N construction on the triangle.
pub fn triangle_5n() -> RationalMatrix {
    parse_rows(
        "
        0    1/4  1/4  1/12  1/8  1/4  1/24  0     0    0    0     0     0    0    0
        1/4  0    1/4  0     0    0    0     1/12  1/8  1/4  1/24  0     0    0    0
        1/4  1/4  0    0     0    0    0     0     0    0    0     1/12  1/8  1/4  1/24
        1/11 0    0    0     3/22 1/11 15/22 0     0    0    0     0     0    0    0
        1/2  0    0    1/2   0    0    0     0     0    0    0     0     0    0    0
        3/4  0    0    1/4   0    0    0     0     0    0    0     0     0    0    0
        1/16 0    0    15/16 0    0    0     0     0    0    0     0     0    0    0
        0    1/11 0    0     0    0    0     0     3/22 1/11 15/22 0     0    0    0
        0    1/2  0    0     0    0    0     1/2   0    0    0     0     0    0    0
        0    3/4  0    0     0    0    0     1/4   0    0    0     0     0    0    0
        0    1/16 0    0     0    0    0     15/16 0    0    0     0     0    0    0
        0    0    1/11 0     0    0    0     0     0    0    0     0     3/22 1/11 15/22
        0    0    1/2  0     0    0    0     0     0    0    0     1/2   0    0    0
        0    0    3/4  0     0    0    0     0     0    0    0     1/4   0    0    0
        0    0    1/16 0     0    0    0     0     0    0    0     15/16 0    0    0
        ",
    )
}

pub fn triangle_5n_s() -> Vec<Rational> {
    parse_list(
        "2/19 2/19 2/19 11/114 1/38 2/57 4/57 11/114 1/38 2/57 4/57 11/114 1/38 2/57 4/57",
    )
}

pub fn triangle_5n_state() -> Vec<f64> {
    parse_floats(
        "0 0 0 0.5894 0.8522 0.7909 0.8495 0.3415 0.7026 1.1778 0.2615 0.0254 0.0305 1.1357 0.3357",
    )
}

/// Eleven-agent random walk: weight 1/deg on each neighbour.
pub fn ring11_matrix() -> RationalMatrix {
    parse_rows(
        "
        0   1/3 1/3 0   0   0   0   0   0   0   1/3
        1/3 0   1/3 0   1/3 0   0   0   0   0   0
        1/3 1/3 0   1/3 0   0   0   0   0   0   0
        0   0   1/3 0   1/3 0   0   1/3 0   0   0
        0   1/3 0   1/3 0   1/3 0   0   0   0   0
        0   0   0   0   1/3 0   1/3 0   0   1/3 0
        0   0   0   0   0   1/2 0   1/2 0   0   0
        0   0   0   1/3 0   0   1/3 0   1/3 0   0
        0   0   0   0   0   0   0   1/2 0   1/2 0
        0   0   0   0   0   1/3 0   0   1/3 0   1/3
        1/2 0   0   0   0   0   0   0   0   1/2 0
        ",
    )
}

pub fn ring11_x0() -> Vec<Rational> {
    "0.1 0.3 0.6 0.43 0.85 0.9 0.45 0.11 0.06 0.51 0.13"
        .split_whitespace()
        .map(|t| parse_decimal(t).expect("fixture decimal"))
        .collect()
}

/// Stationary vector of the 5N construction on `ring11_matrix`.
pub fn ring11_5n_s() -> Vec<Rational> {
    let deg3 = "11/380 3/380 1/95 2/95";
    let deg2 = "11/570 1/190 2/285 4/285";
    let mut text = String::from("3/95 3/95 3/95 3/95 3/95 3/95 2/95 3/95 2/95 3/95 2/95");
    for block in [deg3, deg3, deg3, deg3, deg3, deg3, deg2, deg3, deg2, deg3, deg2] {
        text.push(' ');
        text.push_str(block);
    }
    parse_list(&text)
}

pub fn ring11_5n_state() -> Vec<f64> {
    parse_floats(
        "0 0 0 0 0 0 0 0 0 0 0
         0.0789501 0.358511 0.0528758 0.162382 0.143901 0.667626 0.9161 0.389181
         0.772374 2.01193 1.53623 0.00630652 0.554657 0.965073 0.479013 0.492756
         0.137887 2.89792 2.14223 1.32303 1.04491 0.596246 2.74642 0.852806
         0.792219 0.802344 2.86735 0.0909197 0.106131 0.280592 0.173293 0.137202
         0.0931979 0.560345 0.0542549 0.0232326 0.650005 2.73045 0.448699 0.0602469
         0.0534166 0.548742 0.437764 0.343937",
    )
}

/// Four-node star centred on node 0 with weight 1/3 outwards and 1 back.
pub fn star4() -> WeightedDigraph {
    use crate::exactla::int;
    use crate::netgraph::Edge;
    let mut edges = Vec::new();
    for leaf in 1..4 {
        edges.push(Edge { src: 0, dst: leaf, w: int(1) });
        edges.push(Edge { src: leaf, dst: 0, w: ratio(1, 3) });
    }
    WeightedDigraph::new(4, edges).expect("valid")
}

/// Admissible three-state gadgets on four nodes (node 0 is the agent), directed edges.
pub const DIGRAPH_GADGETS_4: [&[(usize, usize)]; 13] = [
    &[(0, 1), (0, 2), (1, 0), (2, 3), (3, 0)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (2, 0), (3, 1)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (2, 1), (3, 1)],
    &[(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (3, 0)],
    &[(0, 1), (0, 2), (1, 0), (1, 3), (2, 3), (3, 0)],
    &[(0, 1), (0, 2), (1, 0), (2, 1), (2, 3), (3, 0)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (2, 0), (3, 0)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (2, 0), (3, 2)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (2, 1), (3, 1)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (2, 0), (3, 1), (3, 2)],
    &[(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 0)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (1, 3), (2, 0), (3, 0)],
    &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 2), (2, 0), (3, 0), (3, 2)],
];

/// Admissible four-state bidirected gadgets on five nodes, undirected edges.
pub const BIDIRECTED_GADGETS_5: [&[(usize, usize)]; 16] = [
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)],
    &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 4)],
    &[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)],
    &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)],
    &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 4)],
    &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 4), (3, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (2, 3)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (2, 4)],
    &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (2, 4), (3, 4)],
    &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)],
];
