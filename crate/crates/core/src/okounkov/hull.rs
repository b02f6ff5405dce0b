//! Exact convex hulls in dimension 2 and 3 over the rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type Point = Vec<BigRational>;

/// `a·x ≤ b`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpace {
    pub normal: Vec<BigRational>,
    pub offset: BigRational,
}

impl HalfSpace {
    pub(crate) fn eval(&self, x: &[BigRational]) -> BigRational {
        dot(&self.normal, x) - &self.offset
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Hull {
    pub vertices: Vec<Point>,
    /// 3D full-dimensional hulls only: facets as vertex indices, counterclockwise
    /// seen from outside, starting at the smallest index.
    pub facets: Vec<Vec<usize>>,
    pub inequalities: Vec<HalfSpace>,
    /// Equalities `a·x = b` cutting out the affine hull.
    pub equations: Vec<HalfSpace>,
    pub affine_dim: usize,
    pub volume: BigRational,
}

pub(crate) fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

fn sub(a: &[BigRational], b: &[BigRational]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross(a: &[BigRational], b: &[BigRational]) -> Point {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn cross2(o: &[BigRational], a: &[BigRational], b: &[BigRational]) -> BigRational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

fn orient3(
    a: &[BigRational],
    b: &[BigRational],
    c: &[BigRational],
    d: &[BigRational],
) -> BigRational {
    dot(&cross(&sub(b, a), &sub(c, a)), &sub(d, a))
}

/// Row echelon reduction; returns independent rows and their pivot columns.
fn echelon(rows: &[Point]) -> (Vec<Point>, Vec<usize>) {
    let mut m: Vec<Point> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let lead = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &lead;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

/// Basis of `{n : n·v = 0 for every row v}`.
fn null_space(rows: &[Point], dim: usize) -> Vec<Point> {
    let (red, pivots) = echelon(rows);
    let mut out = Vec::new();
    for free in (0..dim).filter(|c| !pivots.contains(c)) {
        let mut n = vec![BigRational::zero(); dim];
        n[free] = BigRational::from_integer(1.into());
        for (row, &pc) in red.iter().zip(&pivots) {
            n[pc] = -row[free].clone();
        }
        out.push(n);
    }
    out
}

pub(crate) fn hull(points: &[Point], dim: usize) -> Hull {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.is_empty() {
        return Hull {
            vertices: vec![],
            facets: vec![],
            inequalities: vec![],
            equations: vec![],
            affine_dim: 0,
            volume: BigRational::zero(),
        };
    }
    let dirs: Vec<Point> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let (_, axes) = echelon(&dirs);
    let k = axes.len();
    let equations: Vec<HalfSpace> = null_space(&dirs, dim)
        .into_iter()
        .map(|n| {
            let offset = dot(&n, &pts[0]);
            HalfSpace { normal: n, offset }
        })
        .collect();
    let lift = |a: &[BigRational], b: BigRational| {
        let mut normal = vec![BigRational::zero(); dim];
        for (s, &ax) in axes.iter().enumerate() {
            normal[ax] = a[s].clone();
        }
        HalfSpace { normal, offset: b }
    };
    match k {
        0 => Hull {
            vertices: pts,
            facets: vec![],
            inequalities: vec![],
            equations,
            affine_dim: 0,
            volume: BigRational::zero(),
        },
        1 => {
            let ax = axes[0];
            let lo = pts.iter().min_by(|a, b| a[ax].cmp(&b[ax])).unwrap().clone();
            let hi = pts.iter().max_by(|a, b| a[ax].cmp(&b[ax])).unwrap().clone();
            let one = BigRational::from_integer(1.into());
            let inequalities = vec![
                lift(&[-one.clone()], -lo[ax].clone()),
                lift(&[one], hi[ax].clone()),
            ];
            let mut vertices = vec![lo, hi];
            vertices.sort();
            Hull {
                vertices,
                facets: vec![],
                inequalities,
                equations,
                affine_dim: 1,
                volume: BigRational::zero(),
            }
        }
        2 => {
            // projection to the two pivot axes is injective on the affine hull
            let proj: Vec<(Point, usize)> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (vec![p[axes[0]].clone(), p[axes[1]].clone()], i))
                .collect();
            let chain = monotone_chain(&proj);
            let n = chain.len();
            let mut inequalities = Vec::with_capacity(n);
            for i in 0..n {
                let a = &proj[chain[i]].0;
                let b = &proj[chain[(i + 1) % n]].0;
                // outward normal of a counterclockwise edge
                let nrm = vec![&b[1] - &a[1], &a[0] - &b[0]];
                let off = dot(&nrm, a);
                inequalities.push(lift(&nrm, off));
            }
            let vertices: Vec<Point> = chain.iter().map(|&i| pts[proj[i].1].clone()).collect();
            let volume = if dim == 2 {
                shoelace(&vertices)
            } else {
                BigRational::zero()
            };
            Hull {
                vertices,
                facets: vec![],
                inequalities,
                equations,
                affine_dim: 2,
                volume,
            }
        }
        3 => hull3(&pts),
        _ => unreachable!("dimension at most three"),
    }
}

/// Counterclockwise extreme points (no collinear ones), starting at the
/// lexicographic minimum.  Input sorted and deduplicated.
fn monotone_chain(pts: &[(Point, usize)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].0.cmp(&pts[b].0));
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && !cross2(
                &pts[lower[lower.len() - 2]].0,
                &pts[lower[lower.len() - 1]].0,
                &pts[i].0,
            )
            .is_positive()
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && !cross2(
                &pts[upper[upper.len() - 2]].0,
                &pts[upper[upper.len() - 1]].0,
                &pts[i].0,
            )
            .is_positive()
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub(crate) fn shoelace(v: &[Point]) -> BigRational {
    let n = v.len();
    let mut acc = BigRational::zero();
    for i in 0..n {
        let a = &v[i];
        let b = &v[(i + 1) % n];
        acc += &a[0] * &b[1] - &a[1] * &b[0];
    }
    (acc / BigRational::from_integer(2.into())).abs()
}

fn hull3(pts: &[Point]) -> Hull {
    // initial tetrahedron
    let a = 0;
    let b = 1;
    let c = (2..pts.len())
        .find(|&i| {
            cross(&sub(&pts[b], &pts[a]), &sub(&pts[i], &pts[a]))
                .iter()
                .any(|x| !x.is_zero())
        })
        .expect("affine rank three");
    let d = (2..pts.len())
        .find(|&i| !orient3(&pts[a], &pts[b], &pts[c], &pts[i]).is_zero())
        .expect("affine rank three");
    let (b, c) = if orient3(&pts[a], &pts[b], &pts[c], &pts[d]).is_positive() {
        (c, b)
    } else {
        (b, c)
    };
    // faces oriented so the tetrahedron lies on the negative side
    let mut faces: Vec<[usize; 3]> = vec![[a, b, c], [a, d, b], [b, d, c], [c, d, a]];
    for i in 0..pts.len() {
        if [a, b, c, d].contains(&i) {
            continue;
        }
        let p = &pts[i];
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| orient3(&pts[f[0]], &pts[f[1]], &pts[f[2]], p).is_positive())
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.insert(e);
            }
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|(u, v)| !edges.contains(&(*v, *u)))
            .copied()
            .collect();
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, v)| !**v)
            .map(|(f, _)| *f)
            .collect();
        for (u, v) in horizon {
            next.push([u, v, i]);
        }
        faces = next;
    }
    // merge coplanar triangles into facets
    let mut planes: BTreeMap<(Point, BigRational), Vec<[usize; 3]>> = BTreeMap::new();
    for f in &faces {
        let n = cross(&sub(&pts[f[1]], &pts[f[0]]), &sub(&pts[f[2]], &pts[f[0]]));
        let scale = n.iter().find(|x| !x.is_zero()).unwrap().abs();
        let n: Point = n.iter().map(|x| x / &scale).collect();
        let off = dot(&n, &pts[f[0]]);
        planes.entry((n, off)).or_default().push(*f);
    }
    let mut facet_polys: Vec<Vec<usize>> = Vec::new();
    let mut inequalities = Vec::new();
    let mut extreme: BTreeSet<usize> = BTreeSet::new();
    for ((n, off), tris) in &planes {
        let mut members: Vec<usize> = tris.iter().flatten().copied().collect();
        members.sort();
        members.dedup();
        // project to the two axes where the normal has no dominant share
        let axis = (0..3)
            .max_by_key(|&j| (n[j].abs(), std::cmp::Reverse(j)))
            .unwrap();
        let keep: Vec<usize> = (0..3).filter(|&j| j != axis).collect();
        let proj: Vec<(Point, usize)> = members
            .iter()
            .map(|&m| (vec![pts[m][keep[0]].clone(), pts[m][keep[1]].clone()], m))
            .collect();
        let mut chain: Vec<usize> = monotone_chain(&proj)
            .into_iter()
            .map(|i| proj[i].1)
            .collect();
        // counterclockwise seen from outside; the (x, z) projection is
        // left-handed
        let flip = n[axis].is_negative() != (axis == 1);
        if flip {
            chain.reverse();
        }
        extreme.extend(chain.iter().copied());
        facet_polys.push(chain);
        inequalities.push(HalfSpace {
            normal: n.clone(),
            offset: off.clone(),
        });
    }
    let old: Vec<usize> = extreme.iter().copied().collect();
    let new_index: BTreeMap<usize, usize> = old.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    let vertices: Vec<Point> = old.iter().map(|&o| pts[o].clone()).collect();
    let mut facets: Vec<Vec<usize>> = facet_polys
        .into_iter()
        .map(|f| {
            let mut f: Vec<usize> = f.iter().map(|o| new_index[o]).collect();
            let start = (0..f.len()).min_by_key(|&i| f[i]).unwrap();
            f.rotate_left(start);
            f
        })
        .collect();
    facets.sort();
    let volume = facet_volume(&vertices, &facets);
    Hull {
        vertices,
        facets,
        inequalities,
        equations: vec![],
        affine_dim: 3,
        volume,
    }
}

/// Volume from outward-oriented facets, `Σ det(a, b, c)/6` over a fan
/// triangulation of each facet.
fn facet_volume(v: &[Point], facets: &[Vec<usize>]) -> BigRational {
    let mut acc = BigRational::zero();
    for f in facets {
        for j in 1..f.len() - 1 {
            let (a, b, c) = (&v[f[0]], &v[f[j]], &v[f[j + 1]]);
            acc += dot(a, &cross(b, c));
        }
    }
    acc / BigRational::from_integer(6.into())
}
