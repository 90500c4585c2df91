//! C ABI over `vmfdp`.
//!
//! Every function returns a [`VmfdpStatus`] and writes results through out
//! pointers. Handles are opaque and owned by the caller, who releases them
//! with the matching `_free` function. On failure a message is kept per
//! thread and can be read with [`vmfdp_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use vmfdp::accountant::{
    best_epsilon, AccountOptions, AccountingScenario, Approach, EpochRule, GaussianSubsampling,
    KairouzVariant, ZhuPrefactor,
};
use vmfdp::dpconvert::{delta_given_epsilon, epsilon_given_delta};
use vmfdp::noisechan::{vmf_sample, GradientVector, RandomSource};
use vmfdp::qif::{
    bayes_capacity_channel, compare_safety, leakage, mechanism_capacity, Channel,
    GaussianCapacityForm, Prior, Safety,
};
use vmfdp::rdp::{MechanismSpec, MultiVmfParams};
use vmfdp::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmfdpStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// An argument is outside the domain of the operation.
    Domain = 2,
    /// A numerical procedure failed (cancellation, no root, optimisation).
    Numerical = 3,
    MalformedChannel = 4,
    DimensionMismatch = 5,
    /// Empty batch, zero vector or a mean that is not a unit vector.
    InvalidVector = 6,
    /// No order certified the requested guarantee.
    NotCertified = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

pub const VMFDP_ZHU_ORIG: u32 = 0;
pub const VMFDP_ZHU_PAPER: u32 = 1;
pub const VMFDP_KAIROUZ_ORIG: u32 = 0;
pub const VMFDP_KAIROUZ_PAPER: u32 = 1;
pub const VMFDP_GAUSS_EXACT: u32 = 0;
pub const VMFDP_GAUSS_ZHU: u32 = 1;
/// Literal epochs for VMF, batch steps for the Gaussian.
pub const VMFDP_EPOCH_RULE_AUTO: u32 = 0;
pub const VMFDP_EPOCH_RULE_LITERAL: u32 = 1;
pub const VMFDP_EPOCH_RULE_STEPS: u32 = 2;
pub const VMFDP_BC_DERIVATION: u32 = 0;
pub const VMFDP_BC_THEOREM: u32 = 1;

/// Formula variants; `vmfdp_options_default` gives the reference settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VmfdpOptions {
    pub zhu: u32,
    pub kairouz: u32,
    pub gauss_subsampling: u32,
    pub epoch_rule: u32,
}

/// Subsampling rate, composition count and target delta. `count` is a
/// number of epochs unless `count_is_steps` is non-zero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VmfdpScenario {
    pub gamma: f64,
    pub count: u64,
    pub count_is_steps: u8,
    pub delta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VmfdpAccountResult {
    pub epsilon_approach1: f64,
    pub epsilon_approach2: f64,
    pub epsilon_best: f64,
    /// 1 or 2.
    pub winner: u32,
    /// Optimal order of the winning approach; NaN when none was needed.
    pub alpha_star: f64,
}

/// An `(epsilon, delta)` guarantee; `alpha_star` is NaN when no order was
/// needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VmfdpGuarantee {
    pub epsilon: f64,
    pub delta: f64,
    pub log_delta: f64,
    pub alpha_star: f64,
}

/// A noise mechanism (Gaussian, VMF, or independent VMF blocks).
pub struct VmfdpMechanism(MechanismSpec);

/// A discrete channel matrix.
pub struct VmfdpChannel(Channel);

/// A seeded random stream.
pub struct VmfdpRng(RandomSource);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(VmfdpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => VmfdpStatus::Domain,
            Error::MalformedChannel(_) => VmfdpStatus::MalformedChannel,
            Error::DimensionMismatch { .. } => VmfdpStatus::DimensionMismatch,
            Error::EmptyBatch | Error::ZeroVector | Error::InvalidMean(_) => {
                VmfdpStatus::InvalidVector
            }
            _ => VmfdpStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: VmfdpStatus, msg: &str) -> Failure {
    Failure(status, msg.to_owned())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VmfdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            VmfdpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside vmfdp");
            VmfdpStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(VmfdpStatus::NullPointer, &format!("{what} is null")))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(VmfdpStatus::NullPointer, &format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(VmfdpStatus::NullPointer, &format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    *get_mut(out, what)? = value;
    Ok(())
}

fn variant<T: Copy>(value: u32, choices: &[T], what: &str) -> Result<T, Failure> {
    choices
        .get(value as usize)
        .copied()
        .ok_or_else(|| fail(VmfdpStatus::Domain, &format!("unknown {what} {value}")))
}

fn options(o: &VmfdpOptions) -> Result<AccountOptions, Failure> {
    Ok(AccountOptions {
        zhu: variant(
            o.zhu,
            &[ZhuPrefactor::Orig, ZhuPrefactor::Paper],
            "prefactor variant",
        )?,
        kairouz: variant(
            o.kairouz,
            &[KairouzVariant::Orig, KairouzVariant::Paper],
            "composition variant",
        )?,
        gaussian: variant(
            o.gauss_subsampling,
            &[GaussianSubsampling::Exact, GaussianSubsampling::Zhu],
            "Gaussian subsampling",
        )?,
        epoch_rule: variant(
            o.epoch_rule,
            &[None, Some(EpochRule::Literal), Some(EpochRule::Steps)],
            "epoch rule",
        )?,
    })
}

fn capacity_form(form: u32) -> Result<GaussianCapacityForm, Failure> {
    variant(
        form,
        &[
            GaussianCapacityForm::Derivation,
            GaussianCapacityForm::Theorem,
        ],
        "capacity form",
    )
}

fn nan_if_none(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = get_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vmfdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn vmfdp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn vmfdp_options_default() -> VmfdpOptions {
    VmfdpOptions {
        zhu: VMFDP_ZHU_ORIG,
        kairouz: VMFDP_KAIROUZ_ORIG,
        gauss_subsampling: VMFDP_GAUSS_EXACT,
        epoch_rule: VMFDP_EPOCH_RULE_AUTO,
    }
}

/// VMF mechanism on `S^{p-1}` with concentration `kappa`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_mechanism_vmf(
    p: usize,
    kappa: f64,
    out: *mut *mut VmfdpMechanism,
) -> VmfdpStatus {
    guard(|| emit(out, VmfdpMechanism(MechanismSpec::vmf(p, kappa)?)))
}

/// Gaussian mechanism in `R^p` with noise multiplier `sigma` and input
/// radius `radius`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_mechanism_gauss(
    p: usize,
    sigma: f64,
    radius: f64,
    out: *mut *mut VmfdpMechanism,
) -> VmfdpStatus {
    guard(|| {
        emit(
            out,
            VmfdpMechanism(MechanismSpec::gauss_with_radius(p, sigma, radius)?),
        )
    })
}

/// Independent VMF mechanisms on blocks of the given sizes, all with
/// concentration `kappa`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_mechanism_vmf_blocks(
    sizes: *const usize,
    n_blocks: usize,
    kappa: f64,
    out: *mut *mut VmfdpMechanism,
) -> VmfdpStatus {
    guard(|| {
        let sizes = slice(sizes, n_blocks, "sizes")?;
        let blocks = MultiVmfParams::uniform(sizes, kappa)?;
        emit(out, VmfdpMechanism(MechanismSpec::VmfMulti { blocks }))
    })
}

#[no_mangle]
pub unsafe extern "C" fn vmfdp_mechanism_free(m: *mut VmfdpMechanism) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of the mechanism's output space.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_mechanism_dim(
    m: *const VmfdpMechanism,
    out: *mut usize,
) -> VmfdpStatus {
    guard(|| put(out, get(m, "mechanism")?.0.dim(), "out"))
}

/// RDP bound `tau(alpha)`, `alpha >= 1`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_rdp(
    m: *const VmfdpMechanism,
    alpha: f64,
    out: *mut f64,
) -> VmfdpStatus {
    guard(|| {
        let tau = get(m, "mechanism")?.0.curve()?.eval(alpha)?;
        put(out, tau, "out")
    })
}

/// Smallest delta certified at `epsilon` by a single run of the mechanism.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_delta_given_epsilon(
    m: *const VmfdpMechanism,
    epsilon: f64,
    out: *mut VmfdpGuarantee,
) -> VmfdpStatus {
    guard(|| {
        let g = delta_given_epsilon(&get(m, "mechanism")?.0.curve()?, epsilon)?;
        put(
            out,
            VmfdpGuarantee {
                epsilon: g.epsilon,
                delta: g.delta,
                log_delta: g.log_delta,
                alpha_star: nan_if_none(g.alpha_star),
            },
            "out",
        )
    })
}

/// Smallest epsilon certified at `delta` by a single run of the mechanism.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_epsilon_given_delta(
    m: *const VmfdpMechanism,
    delta: f64,
    out: *mut VmfdpGuarantee,
) -> VmfdpStatus {
    guard(|| {
        let g = epsilon_given_delta(&get(m, "mechanism")?.0.curve()?, delta)?;
        put(
            out,
            VmfdpGuarantee {
                epsilon: g.epsilon,
                delta: g.delta,
                log_delta: g.log_delta,
                alpha_star: nan_if_none(g.alpha_star),
            },
            "out",
        )
    })
}

/// Subsampled, composed accounting with both approaches. `opts` may be null
/// for the defaults.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_account(
    m: *const VmfdpMechanism,
    scenario: *const VmfdpScenario,
    opts: *const VmfdpOptions,
    out: *mut VmfdpAccountResult,
) -> VmfdpStatus {
    guard(|| {
        let m = &get(m, "mechanism")?.0;
        let s = get(scenario, "scenario")?;
        let opts = options(opts.as_ref().unwrap_or(&vmfdp_options_default()))?;
        let scenario = if s.count_is_steps != 0 {
            AccountingScenario::steps(s.gamma, s.count, s.delta)?
        } else {
            AccountingScenario::epochs(s.gamma, s.count, s.delta)?
        };
        let r = best_epsilon(m, &scenario, &opts)?;
        if !r.epsilon_best.is_finite() {
            return Err(fail(
                VmfdpStatus::NotCertified,
                "no order certifies the target delta",
            ));
        }
        put(
            out,
            VmfdpAccountResult {
                epsilon_approach1: r.epsilon_approach1,
                epsilon_approach2: r.epsilon_approach2,
                epsilon_best: r.epsilon_best,
                winner: match r.winner {
                    Approach::Approach1 => 1,
                    Approach::Approach2 => 2,
                },
                alpha_star: nan_if_none(r.alpha_star()),
            },
            "out",
        )
    })
}

/// Natural log of the mechanism's Bayes' capacity. `form` selects the
/// Gaussian closed form (`VMFDP_BC_*`); it is ignored for VMF.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_capacity(
    m: *const VmfdpMechanism,
    form: u32,
    out_log: *mut f64,
) -> VmfdpStatus {
    guard(|| {
        let c = mechanism_capacity(&get(m, "mechanism")?.0, capacity_form(form)?)?;
        put(out_log, c.log_capacity, "out")
    })
}

/// Writes -1 if `a` is safer than `b` (smaller capacity), 0 if equal and
/// 1 if less safe. Both mechanisms must have the same dimension.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_compare(
    a: *const VmfdpMechanism,
    b: *const VmfdpMechanism,
    form: u32,
    out: *mut i32,
) -> VmfdpStatus {
    guard(|| {
        let s = compare_safety(&get(a, "a")?.0, &get(b, "b")?.0, capacity_form(form)?)?;
        let v = match s {
            Safety::Safer => -1,
            Safety::Equal => 0,
            Safety::LessSafe => 1,
        };
        put(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn vmfdp_rng_new(seed: u64, out: *mut *mut VmfdpRng) -> VmfdpStatus {
    guard(|| emit(out, VmfdpRng(RandomSource::from_seed(seed))))
}

#[no_mangle]
pub unsafe extern "C" fn vmfdp_rng_free(rng: *mut VmfdpRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Draws one VMF sample around the unit vector `mean[0..p]` into
/// `out[0..p]`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_vmf_sample(
    rng: *mut VmfdpRng,
    mean: *const f64,
    p: usize,
    kappa: f64,
    out: *mut f64,
) -> VmfdpStatus {
    guard(|| {
        let rng = get_mut(rng, "rng")?;
        let mean = GradientVector::new(slice(mean, p, "mean")?.to_vec())?;
        if out.is_null() {
            return Err(fail(VmfdpStatus::NullPointer, "out is null"));
        }
        let y = vmf_sample(&mean, kappa, &mut rng.0)?;
        ptr::copy_nonoverlapping(y.as_slice().as_ptr(), out, p);
        Ok(())
    })
}

/// Channel from a row-major `rows x cols` matrix of probabilities.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_channel_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut VmfdpChannel,
) -> VmfdpStatus {
    guard(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| fail(VmfdpStatus::MalformedChannel, "matrix size overflows"))?;
        let data = slice(data, n, "data")?;
        if data.is_empty() {
            return Err(fail(
                VmfdpStatus::MalformedChannel,
                "channel must be non-empty",
            ));
        }
        let matrix = data.chunks(cols).map(<[f64]>::to_vec).collect();
        emit(out, VmfdpChannel(Channel::new(matrix)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn vmfdp_channel_free(c: *mut VmfdpChannel) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Bayes' capacity (multiplicative) of a channel.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_channel_capacity(
    c: *const VmfdpChannel,
    out: *mut f64,
) -> VmfdpStatus {
    guard(|| {
        put(
            out,
            bayes_capacity_channel(&get(c, "channel")?.0).capacity,
            "out",
        )
    })
}

/// Multiplicative Bayes leakage of a channel under `prior[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn vmfdp_channel_leakage(
    c: *const VmfdpChannel,
    prior: *const f64,
    n: usize,
    out: *mut f64,
) -> VmfdpStatus {
    guard(|| {
        let prior = Prior::new(slice(prior, n, "prior")?.to_vec())?;
        put(out, leakage(&prior, &get(c, "channel")?.0)?, "out")
    })
}

/// `a` followed by `b` (matrix product).
#[no_mangle]
pub unsafe extern "C" fn vmfdp_channel_compose(
    a: *const VmfdpChannel,
    b: *const VmfdpChannel,
    out: *mut *mut VmfdpChannel,
) -> VmfdpStatus {
    guard(|| {
        let c = get(a, "a")?.0.compose(&get(b, "b")?.0)?;
        emit(out, VmfdpChannel(c))
    })
}
