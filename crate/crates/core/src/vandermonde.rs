//! Transposed Vandermonde products and solves over Z_q.
//!
//! Multipoint evaluation and interpolation are emitted as straight-line programs that
//! are linear in their inputs; transposing those programs gives V x and V^-1 y, where
//! V has entries V[t][j] = a_j^t.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::numeric::{bulk_inverse, FieldCtx, Residue};

/// Systems up to this size use the explicit quadratic formulas.
pub const DIRECT_CUTOFF: usize = 32;
const KARATSUBA_CUTOFF: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VandermondeError {
    #[error("evaluation points are not pairwise distinct")]
    DuplicatePoint,
    #[error("gate {0} is not linear in the inputs")]
    NonLinear(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("gate {0} refers to a later gate")]
    Cyclic(usize),
}

/// Handle to a gate whose value is linear in the inputs; `None` is the zero map.
pub type Lin = Option<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input(u32),
    Const(Residue),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
}

/// A straight-line program; outputs set to `None` are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Slp {
    n_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<Lin>,
    build_inversions: usize,
}

impl Slp {
    pub fn new(n_inputs: usize, gates: Vec<Gate>, outputs: Vec<Lin>) -> Result<Self, VandermondeError> {
        for (g, gate) in gates.iter().enumerate() {
            let ok = match *gate {
                Gate::Input(i) => (i as usize) < n_inputs,
                Gate::Const(_) => true,
                Gate::Add(a, b) | Gate::Sub(a, b) | Gate::Mul(a, b) => (a as usize) < g && (b as usize) < g,
            };
            if !ok {
                return Err(VandermondeError::Cyclic(g));
            }
        }
        if outputs.iter().flatten().any(|&o| o as usize >= gates.len()) {
            return Err(VandermondeError::Dimension("output refers to a missing gate".into()));
        }
        Ok(Slp { n_inputs, gates, outputs, build_inversions: 0 })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Lin] {
        &self.outputs
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Field inversions spent while building the program.
    pub fn build_inversions(&self) -> usize {
        self.build_inversions
    }

    /// Gates of each kind: (add/sub, mul, const, input).
    pub fn gate_counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for g in &self.gates {
            match g {
                Gate::Add(..) | Gate::Sub(..) => c.0 += 1,
                Gate::Mul(..) => c.1 += 1,
                Gate::Const(_) => c.2 += 1,
                Gate::Input(_) => c.3 += 1,
            }
        }
        c
    }

    pub fn eval(&self, x: &[Residue], ctx: &FieldCtx) -> Vec<Residue> {
        assert_eq!(x.len(), self.n_inputs, "input length");
        let mut v = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let r = match *gate {
                Gate::Input(i) => x[i as usize],
                Gate::Const(c) => c,
                Gate::Add(a, b) => ctx.add(v[a as usize], v[b as usize]),
                Gate::Sub(a, b) => ctx.sub(v[a as usize], v[b as usize]),
                Gate::Mul(a, b) => ctx.mul(v[a as usize], v[b as usize]),
            };
            v.push(r);
        }
        self.outputs.iter().map(|o| o.map_or(ctx.zero(), |g| v[g as usize])).collect()
    }
}

struct Builder<'a> {
    ctx: &'a FieldCtx,
    gates: Vec<Gate>,
    consts: HashMap<Residue, u32>,
    inputs: HashMap<u32, u32>,
}

impl<'a> Builder<'a> {
    fn new(ctx: &'a FieldCtx) -> Self {
        Builder { ctx, gates: Vec::new(), consts: HashMap::new(), inputs: HashMap::new() }
    }

    fn push(&mut self, g: Gate) -> u32 {
        self.gates.push(g);
        (self.gates.len() - 1) as u32
    }

    fn input(&mut self, i: usize) -> Lin {
        if let Some(&g) = self.inputs.get(&(i as u32)) {
            return Some(g);
        }
        let g = self.push(Gate::Input(i as u32));
        self.inputs.insert(i as u32, g);
        Some(g)
    }

    fn constant(&mut self, c: Residue) -> u32 {
        if let Some(&g) = self.consts.get(&c) {
            return g;
        }
        let g = self.push(Gate::Const(c));
        self.consts.insert(c, g);
        g
    }

    fn add(&mut self, a: Lin, b: Lin) -> Lin {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(self.push(Gate::Add(a, b))),
        }
    }

    fn sub(&mut self, a: Lin, b: Lin) -> Lin {
        match (a, b) {
            (x, None) => x,
            (None, b) => {
                let m1 = self.ctx.neg(self.ctx.one());
                self.scale(m1, b)
            }
            (Some(a), Some(b)) => Some(self.push(Gate::Sub(a, b))),
        }
    }

    fn scale(&mut self, c: Residue, a: Lin) -> Lin {
        let a = a?;
        if self.ctx.is_zero(c) {
            return None;
        }
        if c == self.ctx.one() {
            return Some(a);
        }
        let k = self.constant(c);
        Some(self.push(Gate::Mul(k, a)))
    }

    fn add_vec(&mut self, a: &[Lin], b: &[Lin]) -> Vec<Lin> {
        (0..a.len().max(b.len()))
            .map(|i| self.add(a.get(i).copied().flatten(), b.get(i).copied().flatten()))
            .collect()
    }

    /// Product of a constant polynomial with a linear one.
    fn mul_cl(&mut self, c: &[Residue], l: &[Lin]) -> Vec<Lin> {
        if c.is_empty() || l.is_empty() {
            return Vec::new();
        }
        let out_len = c.len() + l.len() - 1;
        if c.len().min(l.len()) <= KARATSUBA_CUTOFF {
            let mut out = vec![None; out_len];
            for (i, &ci) in c.iter().enumerate() {
                for (j, &lj) in l.iter().enumerate() {
                    let t = self.scale(ci, lj);
                    out[i + j] = self.add(out[i + j], t);
                }
            }
            return out;
        }
        let (short, long) = (c.len().min(l.len()), c.len().max(l.len()));
        let mut out = vec![None; out_len];
        if long >= 2 * short {
            let step = short;
            for s in (0..long).step_by(step) {
                let e = (s + step).min(long);
                let part = if c.len() >= l.len() { self.mul_cl(&c[s..e], l) } else { self.mul_cl(c, &l[s..e]) };
                for (i, v) in part.into_iter().enumerate() {
                    out[s + i] = self.add(out[s + i], v);
                }
            }
            return out;
        }
        let h = long.div_ceil(2);
        let (c0, c1) = c.split_at(h.min(c.len()));
        let (l0, l1) = l.split_at(h.min(l.len()));
        let z0 = self.mul_cl(c0, l0);
        let z2 = self.mul_cl(c1, l1);
        let cs: Vec<Residue> = (0..c0.len().max(c1.len()))
            .map(|i| {
                let a = c0.get(i).copied().unwrap_or(self.ctx.zero());
                let b = c1.get(i).copied().unwrap_or(self.ctx.zero());
                self.ctx.add(a, b)
            })
            .collect();
        let ls = self.add_vec(l0, l1);
        let mut z1 = self.mul_cl(&cs, &ls);
        for (i, v) in z0.iter().enumerate() {
            z1[i] = self.sub(z1[i], *v);
        }
        for (i, v) in z2.iter().enumerate() {
            z1[i] = self.sub(z1[i], *v);
        }
        for (i, v) in z0.into_iter().enumerate() {
            out[i] = self.add(out[i], v);
        }
        for (i, v) in z1.into_iter().enumerate() {
            if h + i < out_len {
                out[h + i] = self.add(out[h + i], v);
            }
        }
        for (i, v) in z2.into_iter().enumerate() {
            out[2 * h + i] = self.add(out[2 * h + i], v);
        }
        out
    }

    /// P mod M for a monic constant M; uses the reversed-series quotient.
    fn rem(&mut self, p: &[Lin], m: &[Residue]) -> Vec<Lin> {
        let d = m.len() - 1;
        if p.len() <= d {
            return p.to_vec();
        }
        let e = p.len() - d;
        let rev_m: Vec<Residue> = m.iter().rev().copied().collect();
        let inv = series_inverse_monic(&rev_m, e, self.ctx);
        let top: Vec<Lin> = (0..e).map(|i| p[p.len() - 1 - i]).collect();
        let mut qrev = self.mul_cl(&inv, &top);
        qrev.truncate(e);
        let q: Vec<Lin> = qrev.into_iter().rev().collect();
        let qm = self.mul_cl(m, &q);
        (0..d).map(|i| self.sub(p[i], qm[i])).collect()
    }

    /// Removes gates that do not reach an output and renumbers the rest.
    fn finish(self, n_inputs: usize, outputs: Vec<Lin>, build_inversions: usize) -> Slp {
        let n = self.gates.len();
        let mut live = vec![false; n];
        for &o in outputs.iter().flatten() {
            live[o as usize] = true;
        }
        for g in (0..n).rev() {
            if !live[g] {
                continue;
            }
            if let Gate::Add(a, b) | Gate::Sub(a, b) | Gate::Mul(a, b) = self.gates[g] {
                live[a as usize] = true;
                live[b as usize] = true;
            }
        }
        let mut map = vec![u32::MAX; n];
        let mut gates = Vec::new();
        for g in 0..n {
            if !live[g] {
                continue;
            }
            map[g] = gates.len() as u32;
            let r = |x: u32| map[x as usize];
            gates.push(match self.gates[g] {
                Gate::Add(a, b) => Gate::Add(r(a), r(b)),
                Gate::Sub(a, b) => Gate::Sub(r(a), r(b)),
                Gate::Mul(a, b) => Gate::Mul(r(a), r(b)),
                other => other,
            });
        }
        let outputs = outputs.into_iter().map(|o| o.map(|g| map[g as usize])).collect();
        Slp { n_inputs, gates, outputs, build_inversions }
    }
}

/// Inverse of f mod x^e for f with constant term 1.
fn series_inverse_monic(f: &[Residue], e: usize, ctx: &FieldCtx) -> Vec<Residue> {
    let mut g = vec![ctx.zero(); e];
    g[0] = ctx.one();
    for i in 1..e {
        let mut s = ctx.zero();
        for j in 1..=i.min(f.len() - 1) {
            s = ctx.add(s, ctx.mul(f[j], g[i - j]));
        }
        g[i] = ctx.neg(s);
    }
    g
}

fn poly_mul(a: &[Residue], b: &[Residue], ctx: &FieldCtx) -> Vec<Residue> {
    let mut out = vec![ctx.zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = ctx.add(out[i + j], ctx.mul(x, y));
        }
    }
    out
}

struct Node {
    lo: usize,
    hi: usize,
    poly: Vec<Residue>,
    kids: Option<Box<(Node, Node)>>,
}

fn subproduct_tree(a: &[Residue], lo: usize, hi: usize, ctx: &FieldCtx) -> Node {
    if hi - lo == 1 {
        return Node { lo, hi, poly: vec![ctx.neg(a[lo]), ctx.one()], kids: None };
    }
    let mid = (lo + hi) / 2;
    let l = subproduct_tree(a, lo, mid, ctx);
    let r = subproduct_tree(a, mid, hi, ctx);
    let poly = poly_mul(&l.poly, &r.poly, ctx);
    Node { lo, hi, poly, kids: Some(Box::new((l, r))) }
}

fn check_distinct(a: &[Residue]) -> Result<(), VandermondeError> {
    let mut seen = HashSet::with_capacity(a.len());
    if a.iter().all(|x| seen.insert(*x)) {
        Ok(())
    } else {
        Err(VandermondeError::DuplicatePoint)
    }
}

/// Circuit for x -> (P(a_1), ..., P(a_n)) with P(X) = sum x_i X^i of `n_coeffs` terms.
pub fn build_eval_circuit(a: &[Residue], n_coeffs: usize, ctx: &FieldCtx) -> Result<Slp, VandermondeError> {
    check_distinct(a)?;
    let mut b = Builder::new(ctx);
    if a.is_empty() {
        return Ok(b.finish(n_coeffs, Vec::new(), 0));
    }
    let p: Vec<Lin> = (0..n_coeffs).map(|i| b.input(i)).collect();
    let tree = subproduct_tree(a, 0, a.len(), ctx);
    let mut out = vec![None; a.len()];
    fn go(b: &mut Builder, p: &[Lin], node: &Node, out: &mut [Lin]) {
        let r = b.rem(p, &node.poly);
        match &node.kids {
            None => out[node.lo] = r.first().copied().flatten(),
            Some(k) => {
                go(b, &r, &k.0, out);
                go(b, &r, &k.1, out);
            }
        }
        debug_assert!(node.hi > node.lo);
    }
    go(&mut b, &p, &tree, &mut out);
    Ok(b.finish(n_coeffs, out, 0))
}

/// 1 / M'(a_j) for M = prod (X - a_j), with a single field inversion.
fn interp_weights(a: &[Residue], ctx: &FieldCtx) -> Result<Vec<Residue>, VandermondeError> {
    bulk_inverse(&derivative_values(a, DIRECT_CUTOFF, ctx), ctx).map_err(|_| VandermondeError::DuplicatePoint)
}

/// M'(a_j) for M = prod (X - a_j); multipoint evaluation above the direct cutoff.
fn derivative_values(a: &[Residue], cutoff: usize, ctx: &FieldCtx) -> Vec<Residue> {
    if a.len() > cutoff {
        let m = subproduct_tree(a, 0, a.len(), ctx).poly;
        let dm: Vec<Residue> = (1..m.len()).map(|t| ctx.mul(ctx.from_u64(t as u64), m[t])).collect();
        if let Ok(c) = build_eval_circuit(a, dm.len(), ctx) {
            return c.eval(&dm, ctx);
        }
    }
    a.iter()
        .enumerate()
        .map(|(j, &x)| {
            a.iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(ctx.one(), |acc, (_, &y)| ctx.mul(acc, ctx.sub(x, y)))
        })
        .collect()
}

fn build_interp_with_weights(a: &[Residue], w: &[Residue], ctx: &FieldCtx, inversions: usize) -> Slp {
    let mut b = Builder::new(ctx);
    if a.is_empty() {
        return b.finish(0, Vec::new(), inversions);
    }
    let tree = subproduct_tree(a, 0, a.len(), ctx);
    fn go(b: &mut Builder, node: &Node, w: &[Residue]) -> Vec<Lin> {
        match &node.kids {
            None => {
                let y = b.input(node.lo);
                vec![b.scale(w[node.lo], y)]
            }
            Some(k) => {
                let pl = go(b, &k.0, w);
                let pr = go(b, &k.1, w);
                let x = b.mul_cl(&k.1.poly, &pl);
                let y = b.mul_cl(&k.0.poly, &pr);
                b.add_vec(&x, &y)
            }
        }
    }
    let mut out = go(&mut b, &tree, w);
    out.resize(a.len(), None);
    b.finish(a.len(), out, inversions)
}

/// Circuit for y -> coefficients of the polynomial of degree < n through (a_i, y_i).
pub fn build_interp_circuit(a: &[Residue], ctx: &FieldCtx) -> Result<Slp, VandermondeError> {
    check_distinct(a)?;
    if a.is_empty() {
        return Ok(build_interp_with_weights(a, &[], ctx, 0));
    }
    let w = interp_weights(a, ctx)?;
    Ok(build_interp_with_weights(a, &w, ctx, 1))
}

/// The program computing the transposed linear map, by a reverse adjoint sweep.
pub fn transpose_slp(c: &Slp, ctx: &FieldCtx) -> Result<Slp, VandermondeError> {
    let n = c.gates.len();
    let mut konst: Vec<Option<Residue>> = vec![None; n];
    for (g, gate) in c.gates.iter().enumerate() {
        konst[g] = match *gate {
            Gate::Input(_) => None,
            Gate::Const(v) => Some(v),
            Gate::Add(a, b) | Gate::Sub(a, b) => match (konst[a as usize], konst[b as usize]) {
                (Some(x), Some(y)) => Some(if matches!(gate, Gate::Add(..)) { ctx.add(x, y) } else { ctx.sub(x, y) }),
                (None, None) => None,
                _ => return Err(VandermondeError::NonLinear(g)),
            },
            Gate::Mul(a, b) => match (konst[a as usize], konst[b as usize]) {
                (Some(x), Some(y)) => Some(ctx.mul(x, y)),
                (None, None) => return Err(VandermondeError::NonLinear(g)),
                _ => None,
            },
        };
    }
    if c.outputs.iter().flatten().any(|&o| konst[o as usize].is_some_and(|v| !ctx.is_zero(v))) {
        return Err(VandermondeError::NonLinear(n));
    }
    let mut b = Builder::new(ctx);
    let mut adj: Vec<Lin> = vec![None; n];
    for (j, &o) in c.outputs.iter().enumerate() {
        if let Some(g) = o {
            if konst[g as usize].is_none() {
                let y = b.input(j);
                adj[g as usize] = b.add(adj[g as usize], y);
            }
        }
    }
    let mut in_adj: Vec<Lin> = vec![None; c.n_inputs];
    for g in (0..n).rev() {
        if konst[g].is_some() {
            continue;
        }
        let Some(ab) = adj[g] else { continue };
        match c.gates[g] {
            Gate::Input(k) => in_adj[k as usize] = b.add(in_adj[k as usize], Some(ab)),
            Gate::Add(x, y) => {
                adj[x as usize] = b.add(adj[x as usize], Some(ab));
                adj[y as usize] = b.add(adj[y as usize], Some(ab));
            }
            Gate::Sub(x, y) => {
                adj[x as usize] = b.add(adj[x as usize], Some(ab));
                adj[y as usize] = b.sub(adj[y as usize], Some(ab));
            }
            Gate::Mul(x, y) => {
                let (k, l) = match konst[x as usize] {
                    Some(v) => (v, y),
                    None => (konst[y as usize].unwrap(), x),
                };
                let t = b.scale(k, Some(ab));
                adj[l as usize] = b.add(adj[l as usize], t);
            }
            Gate::Const(_) => {}
        }
    }
    Ok(b.finish(c.outputs.len(), in_adj, c.build_inversions))
}

/// y_t = sum_j a_j^t x_j for t < rows.
pub fn vandermonde_mul_rows(a: &[Residue], x: &[Residue], rows: usize, ctx: &FieldCtx) -> Result<Vec<Residue>, VandermondeError> {
    if a.len() != x.len() {
        return Err(VandermondeError::Dimension(format!("{} points, {} values", a.len(), x.len())));
    }
    if a.len() <= DIRECT_CUTOFF || rows <= DIRECT_CUTOFF {
        check_distinct(a)?;
        let mut cur = x.to_vec();
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            out.push(cur.iter().fold(ctx.zero(), |s, &v| ctx.add(s, v)));
            for (c, &p) in cur.iter_mut().zip(a) {
                *c = ctx.mul(*c, p);
            }
        }
        return Ok(out);
    }
    let c = transpose_slp(&build_eval_circuit(a, rows, ctx)?, ctx)?;
    Ok(c.eval(x, ctx))
}

/// V x for the square matrix V[t][j] = a_j^t.
pub fn vandermonde_mul(a: &[Residue], x: &[Residue], ctx: &FieldCtx) -> Result<Vec<Residue>, VandermondeError> {
    vandermonde_mul_rows(a, x, a.len(), ctx)
}

/// V^-1 y for the square matrix V[t][j] = a_j^t, with one field inversion.
pub fn vandermonde_solve(a: &[Residue], y: &[Residue], ctx: &FieldCtx) -> Result<Vec<Residue>, VandermondeError> {
    let mut batch = SolveBatch::new(ctx);
    batch.push(a.to_vec(), y.to_vec())?;
    Ok(batch.solve_all()?.pop().unwrap())
}

/// Coefficients of M = prod (X - a_j).
fn master_poly(a: &[Residue], ctx: &FieldCtx) -> Vec<Residue> {
    let mut m = vec![ctx.one()];
    for &p in a {
        m = poly_mul(&m, &[ctx.neg(p), ctx.one()], ctx);
    }
    m
}

fn direct_solve(a: &[Residue], w: &[Residue], m: &[Residue], y: &[Residue], ctx: &FieldCtx) -> Vec<Residue> {
    let n = a.len();
    (0..n)
        .map(|j| {
            // Synthetic division M / (X - a_j), accumulated against y on the fly.
            let mut b = m[n];
            let mut s = ctx.mul(b, y[n - 1]);
            for t in (0..n - 1).rev() {
                b = ctx.add(m[t + 1], ctx.mul(a[j], b));
                s = ctx.add(s, ctx.mul(b, y[t]));
            }
            ctx.mul(w[j], s)
        })
        .collect()
}

/// Many independent square solves sharing one field inversion. Each system may carry
/// several right-hand sides.
pub struct SolveBatch<'a> {
    ctx: &'a FieldCtx,
    cutoff: usize,
    systems: Vec<(Vec<Residue>, Vec<Vec<Residue>>)>,
}

impl<'a> SolveBatch<'a> {
    pub fn new(ctx: &'a FieldCtx) -> Self {
        SolveBatch { ctx, cutoff: DIRECT_CUTOFF, systems: Vec::new() }
    }

    /// Systems of at most `cutoff` points are solved by the quadratic formulas.
    pub fn with_direct_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn push(&mut self, a: Vec<Residue>, y: Vec<Residue>) -> Result<usize, VandermondeError> {
        self.push_multi(a, vec![y])
    }

    pub fn push_multi(&mut self, a: Vec<Residue>, ys: Vec<Vec<Residue>>) -> Result<usize, VandermondeError> {
        if let Some(y) = ys.iter().find(|y| y.len() != a.len()) {
            return Err(VandermondeError::Dimension(format!("{} points, {} values", a.len(), y.len())));
        }
        self.systems.push((a, ys));
        Ok(self.systems.len() - 1)
    }

    /// Solutions for the first right-hand side of every system.
    pub fn solve_all(self) -> Result<Vec<Vec<Residue>>, VandermondeError> {
        Ok(self.solve_all_multi()?.into_iter().map(|mut v| v.swap_remove(0)).collect())
    }

    pub fn solve_all_multi(self) -> Result<Vec<Vec<Vec<Residue>>>, VandermondeError> {
        let ctx = self.ctx;
        let mut denoms = Vec::new();
        for (a, _) in &self.systems {
            denoms.extend(derivative_values(a, self.cutoff, ctx));
        }
        let w_all = if denoms.is_empty() {
            Vec::new()
        } else {
            bulk_inverse(&denoms, ctx).map_err(|_| VandermondeError::DuplicatePoint)?
        };
        let mut off = 0;
        let mut out = Vec::with_capacity(self.systems.len());
        for (a, ys) in &self.systems {
            let w = &w_all[off..off + a.len()];
            off += a.len();
            if a.is_empty() {
                out.push(vec![Vec::new(); ys.len()]);
            } else if a.len() <= self.cutoff {
                let m = master_poly(a, ctx);
                out.push(ys.iter().map(|y| direct_solve(a, w, &m, y, ctx)).collect());
            } else {
                let c = transpose_slp(&build_interp_with_weights(a, w, ctx, 0), ctx)?;
                out.push(ys.iter().map(|y| c.eval(y, ctx)).collect());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f101() -> FieldCtx {
        FieldCtx::new(101).unwrap()
    }

    fn r(ctx: &FieldCtx, v: &[u64]) -> Vec<Residue> {
        v.iter().map(|&x| ctx.from_u64(x)).collect()
    }

    fn plain(ctx: &FieldCtx, v: &[Residue]) -> Vec<u128> {
        v.iter().map(|&x| ctx.to_u128(x)).collect()
    }

    #[test]
    fn eval_and_interp_small() {
        let ctx = f101();
        let a = r(&ctx, &[1, 2]);
        let e = build_eval_circuit(&a, 2, &ctx).unwrap();
        assert_eq!(plain(&ctx, &e.eval(&r(&ctx, &[3, 4]), &ctx)), vec![7, 11]);
        let i = build_interp_circuit(&a, &ctx).unwrap();
        assert_eq!(plain(&ctx, &i.eval(&r(&ctx, &[7, 11]), &ctx)), vec![3, 4]);
        assert_eq!(i.build_inversions(), 1);
        let one = build_eval_circuit(&r(&ctx, &[5]), 1, &ctx).unwrap();
        assert_eq!(plain(&ctx, &one.eval(&r(&ctx, &[9]), &ctx)), vec![9]);
    }

    #[test]
    fn square_mul_small() {
        let ctx = f101();
        let v = vandermonde_mul(&r(&ctx, &[1, 2]), &r(&ctx, &[3, 4]), &ctx).unwrap();
        assert_eq!(plain(&ctx, &v), vec![7, 11]);
        let s = vandermonde_solve(&r(&ctx, &[1, 2]), &v, &ctx).unwrap();
        assert_eq!(plain(&ctx, &s), vec![3, 4]);
    }

    #[test]
    fn duplicates_rejected() {
        let ctx = f101();
        assert_eq!(build_eval_circuit(&r(&ctx, &[3, 3]), 2, &ctx), Err(VandermondeError::DuplicatePoint));
        assert!(vandermonde_solve(&r(&ctx, &[3, 104]), &r(&ctx, &[1, 1]), &ctx).is_err());
    }

    #[test]
    fn nonlinear_rejected() {
        let ctx = f101();
        let c = Slp::new(1, vec![Gate::Input(0), Gate::Mul(0, 0)], vec![Some(1)]).unwrap();
        assert_eq!(transpose_slp(&c, &ctx), Err(VandermondeError::NonLinear(1)));
    }

    #[test]
    fn transpose_of_fixed_matrix() {
        let ctx = f101();
        // [[1,1],[1,2]] x
        let gates = vec![Gate::Input(0), Gate::Input(1), Gate::Add(0, 1), Gate::Add(2, 1)];
        let c = Slp::new(2, gates, vec![Some(2), Some(3)]).unwrap();
        let t = transpose_slp(&c, &ctx).unwrap();
        assert_eq!(plain(&ctx, &t.eval(&r(&ctx, &[5, 7]), &ctx)), vec![12, 19]);
    }
}
