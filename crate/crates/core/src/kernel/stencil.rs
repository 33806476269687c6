//! Point update of the explicit scheme, specialised on dimension, stencil
//! radius and density mode.

use crate::Real;

pub(crate) const MAX_RADIUS: usize = 10;

/// Read-only data shared by every plane of one time step.
pub(crate) struct StepContext<'a, T> {
    pub strides: [usize; 3],
    /// Padded index range `lo..hi` of updated nodes per axis.
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    /// `v_0 * sum_a 1/h_a^2`.
    pub centre: T,
    /// `lap[a][j] = v_j / h_a^2`.
    pub lap: [[T; MAX_RADIUS + 1]; 3],
    /// `grad[a][j] = w_j / (2 h_a)`.
    pub grad: [[T; MAX_RADIUS + 1]; 3],
    pub c2dt2: &'a [T],
    pub damp_prev: &'a [T],
    pub inv_damp: &'a [T],
    pub log_grad: Option<[&'a [T]; 3]>,
}

/// Updates one slab (a fixed index along axis 0). On entry `out` holds the
/// previous level of that slab, on exit the next level.
pub(crate) type PlaneFn<T> = fn(&StepContext<'_, T>, usize, &mut [T], &[T]);

#[inline(always)]
fn line<T: Real, const ND: usize, const R: usize, const VD: bool>(
    ctx: &StepContext<'_, T>,
    base: usize,
    plane_base: usize,
    out: &mut [T],
    curr: &[T],
    acc: &mut Vec<T>,
) {
    let last = ND - 1;
    let lo = base + ctx.lo[last];
    let hi = base + ctx.hi[last];
    let len = hi - lo;
    acc.clear();
    acc.extend(curr[lo..hi].iter().map(|&c| ctx.centre * c));
    // accumulate the Laplacian one (axis, tap) pair at a time so that the
    // inner loops run over contiguous slices
    for a in 0..ND {
        let s = ctx.strides[a];
        for j in 1..=R {
            let w = ctx.lap[a][j];
            let up = &curr[lo + j * s..hi + j * s];
            let down = &curr[lo - j * s..hi - j * s];
            for ((v, &u), &d) in acc.iter_mut().zip(up).zip(down) {
                *v += w * (u + d);
            }
        }
    }
    if VD {
        let g = ctx.log_grad.expect("variable density without gradient");
        for a in 0..ND {
            let s = ctx.strides[a];
            let ga = &g[a][lo..hi];
            for j in 1..=R {
                let w = ctx.grad[a][j];
                let up = &curr[lo + j * s..hi + j * s];
                let down = &curr[lo - j * s..hi - j * s];
                for (((v, &u), &d), &gr) in acc.iter_mut().zip(up).zip(down).zip(ga) {
                    *v -= gr * (w * (u - d));
                }
            }
        }
    }
    let two = T::of(2.0);
    let o = &mut out[lo - plane_base..hi - plane_base];
    let c = &curr[lo..hi];
    let c2 = &ctx.c2dt2[lo..hi];
    let dp = &ctx.damp_prev[lo..hi];
    let id = &ctx.inv_damp[lo..hi];
    debug_assert_eq!(o.len(), len);
    for k in 0..len {
        o[k] = (c2[k] * acc[k] + two * c[k] - dp[k] * o[k]) * id[k];
    }
}

fn plane<T: Real, const ND: usize, const R: usize, const VD: bool>(
    ctx: &StepContext<'_, T>,
    z: usize,
    out: &mut [T],
    curr: &[T],
) {
    let plane_base = z * ctx.strides[0];
    let mut acc = Vec::with_capacity(ctx.hi[ND - 1] - ctx.lo[ND - 1]);
    match ND {
        2 => line::<T, ND, R, VD>(ctx, plane_base, plane_base, out, curr, &mut acc),
        3 => {
            for x in ctx.lo[1]..ctx.hi[1] {
                line::<T, ND, R, VD>(ctx, plane_base + x * ctx.strides[1], plane_base, out, curr, &mut acc);
            }
        }
        _ => unreachable!("grids are 2D or 3D"),
    }
}

macro_rules! by_radius {
    ($T:ty, $nd:literal, $vd:literal, $r:expr) => {
        match $r {
            1 => plane::<$T, $nd, 1, $vd> as PlaneFn<$T>,
            2 => plane::<$T, $nd, 2, $vd>,
            3 => plane::<$T, $nd, 3, $vd>,
            4 => plane::<$T, $nd, 4, $vd>,
            5 => plane::<$T, $nd, 5, $vd>,
            6 => plane::<$T, $nd, 6, $vd>,
            7 => plane::<$T, $nd, 7, $vd>,
            8 => plane::<$T, $nd, 8, $vd>,
            9 => plane::<$T, $nd, 9, $vd>,
            10 => plane::<$T, $nd, 10, $vd>,
            r => panic!("unsupported stencil radius {r}"),
        }
    };
}

pub(crate) fn plane_kernel<T: Real>(ndim: usize, radius: usize, variable_density: bool) -> PlaneFn<T> {
    match (ndim, variable_density) {
        (2, false) => by_radius!(T, 2, false, radius),
        (2, true) => by_radius!(T, 2, true, radius),
        (3, false) => by_radius!(T, 3, false, radius),
        (3, true) => by_radius!(T, 3, true, radius),
        (n, _) => panic!("unsupported dimension {n}"),
    }
}
