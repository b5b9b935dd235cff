//! Thin safe wrappers over the handful of LAPACK drivers we need.

use lapack_sys::__BindgenComplex as LC;

use super::mat::{c, CMat, C64, ZERO};
use crate::error::{Error, Result};

fn ptr(m: &mut [C64]) -> *mut LC<f64> {
    m.as_mut_ptr() as *mut LC<f64>
}

fn cptr(m: &[C64]) -> *const LC<f64> {
    m.as_ptr() as *const LC<f64>
}

fn ch(b: u8) -> std::os::raw::c_char {
    b as std::os::raw::c_char
}

pub enum EigRange {
    All,
    Values(f64, f64),
}

/// Eigenpairs of a Hermitian matrix (upper triangle referenced), eigenvalues ascending.
pub fn zheevr(h: &CMat, range: EigRange, vectors: bool) -> Result<(Vec<f64>, Option<CMat>)> {
    let n = h.rows() as i32;
    let nu = h.rows();
    if nu == 0 {
        return Ok((vec![], vectors.then(|| CMat::zeros(0, 0))));
    }
    let mut a = h.data().to_vec();
    let jobz = ch(if vectors { b'V' } else { b'N' });
    let (rng, vl, vu) = match range {
        EigRange::All => (ch(b'A'), 0.0, 0.0),
        EigRange::Values(lo, hi) => (ch(b'V'), lo, hi),
    };
    let uplo = ch(b'U');
    let (il, iu, abstol) = (0i32, 0i32, 0.0f64);
    let mut m = 0i32;
    let mut w = vec![0.0; nu];
    let mut z = vec![ZERO; if vectors { nu * nu } else { 1 }];
    let ldz = n.max(1);
    let mut isuppz = vec![0i32; 2 * nu];
    let mut info = 0i32;
    let mut wq = [ZERO];
    let mut rwq = [0.0];
    let mut iwq = [0i32];
    let q = -1i32;
    unsafe {
        lapack_sys::zheevr_(
            &jobz, &rng, &uplo, &n, ptr(&mut a), &n, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), ptr(&mut z), &ldz, isuppz.as_mut_ptr(), ptr(&mut wq), &q,
            rwq.as_mut_ptr(), &q, iwq.as_mut_ptr(), &q, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevr", info });
    }
    let lw = wq[0].re as i32;
    let lrw = rwq[0] as i32;
    let liw = iwq[0];
    let mut work = vec![ZERO; lw.max(1) as usize];
    let mut rwork = vec![0.0; lrw.max(1) as usize];
    let mut iwork = vec![0i32; liw.max(1) as usize];
    unsafe {
        lapack_sys::zheevr_(
            &jobz, &rng, &uplo, &n, ptr(&mut a), &n, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), ptr(&mut z), &ldz, isuppz.as_mut_ptr(), ptr(&mut work), &lw,
            rwork.as_mut_ptr(), &lrw, iwork.as_mut_ptr(), &liw, &mut info,
        );
    }
    if info > 0 {
        return Err(Error::NoConvergence { what: "zheevr" });
    }
    if info < 0 {
        return Err(Error::Lapack { routine: "zheevr", info });
    }
    let m = m as usize;
    w.truncate(m);
    let vecs = vectors.then(|| {
        z.truncate(nu * m);
        let mut v = CMat::zeros(nu, m);
        v.data_mut().copy_from_slice(&z);
        v
    });
    Ok((w, vecs))
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: CMat,
    ipiv: Vec<i32>,
}

impl Lu {
    pub fn new(a: &CMat) -> Result<(Lu, bool)> {
        assert!(a.is_square());
        let n = a.rows() as i32;
        let mut lu = a.clone();
        let mut ipiv = vec![0i32; a.rows()];
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrf_(&n, &n, ptr(lu.data_mut()), &n.max(1), ipiv.as_mut_ptr(), &mut info);
        }
        if info < 0 {
            return Err(Error::Lapack { routine: "zgetrf", info });
        }
        Ok((Lu { lu, ipiv }, info == 0))
    }

    /// Reciprocal condition number estimate in the 1-norm.
    pub fn rcond(&self, anorm1: f64) -> f64 {
        let n = self.lu.rows() as i32;
        let mut rc = 0.0;
        let mut work = vec![ZERO; 2 * self.lu.rows().max(1)];
        let mut rwork = vec![0.0; 2 * self.lu.rows().max(1)];
        let mut info = 0;
        unsafe {
            lapack_sys::zgecon_(
                &ch(b'1'), &n, cptr(self.lu.data()), &n.max(1), &anorm1, &mut rc,
                ptr(&mut work), rwork.as_mut_ptr(), &mut info,
            );
        }
        rc
    }

    /// log|det| and the unit-modulus phase of det.
    pub fn log_abs_det(&self) -> (f64, C64) {
        let mut la = 0.0;
        let mut ph = c(1.0, 0.0);
        for i in 0..self.lu.rows() {
            let d = self.lu[(i, i)];
            la += d.norm().ln();
            ph *= d / d.norm();
            if self.ipiv[i] != i as i32 + 1 {
                ph = -ph;
            }
        }
        (la, ph)
    }

    pub fn solve(&self, b: &CMat) -> Result<CMat> {
        let n = self.lu.rows() as i32;
        let nrhs = b.cols() as i32;
        let mut x = b.clone();
        let mut info = 0;
        unsafe {
            lapack_sys::zgetrs_(
                &ch(b'N'), &n, &nrhs, cptr(self.lu.data()), &n.max(1), self.ipiv.as_ptr(),
                ptr(x.data_mut()), &n.max(1), &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Lapack { routine: "zgetrs", info });
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.solve(&CMat::identity(self.lu.rows()))
    }
}

pub fn norm1(a: &CMat) -> f64 {
    (0..a.cols()).map(|j| a.column_slice(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inertia (negative, zero, positive) of a Hermitian matrix from a Bunch–Kaufman factorization.
pub fn inertia(h: &CMat) -> Result<(usize, usize, usize)> {
    let nu = h.rows();
    if nu == 0 {
        return Ok((0, 0, 0));
    }
    let n = nu as i32;
    let mut a = h.data().to_vec();
    let mut ipiv = vec![0i32; nu];
    let mut info = 0;
    let mut wq = [ZERO];
    let q = -1;
    let uplo = ch(b'L');
    unsafe {
        lapack_sys::zhetrf_(&uplo, &n, ptr(&mut a), &n, ipiv.as_mut_ptr(), ptr(&mut wq), &q, &mut info);
    }
    let lw = (wq[0].re as i32).max(1);
    let mut work = vec![ZERO; lw as usize];
    unsafe {
        lapack_sys::zhetrf_(&uplo, &n, ptr(&mut a), &n, ipiv.as_mut_ptr(), ptr(&mut work), &lw, &mut info);
    }
    if info < 0 {
        return Err(Error::Lapack { routine: "zhetrf", info });
    }
    let at = |i: usize, j: usize| a[i + j * nu];
    let (mut neg, mut zero, mut pos) = (0, 0, 0);
    let mut k = 0;
    while k < nu {
        if ipiv[k] > 0 {
            let d = at(k, k).re;
            if d < 0.0 {
                neg += 1;
            } else if d > 0.0 {
                pos += 1;
            } else {
                zero += 1;
            }
            k += 1;
        } else {
            let (a11, a21, a22) = (at(k, k).re, at(k + 1, k), at(k + 1, k + 1).re);
            let det = a11 * a22 - a21.norm_sqr();
            if det < 0.0 {
                neg += 1;
                pos += 1;
            } else if det > 0.0 {
                if a11 + a22 > 0.0 {
                    pos += 2;
                } else {
                    neg += 2;
                }
            } else {
                zero += 1;
                if a11 + a22 > 0.0 {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
            k += 2;
        }
    }
    Ok((neg, zero, pos))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn zgeev(b: &CMat) -> Result<(Vec<C64>, CMat)> {
    let nu = b.rows();
    let n = nu as i32;
    let mut a = b.data().to_vec();
    let mut w = vec![ZERO; nu];
    let mut vl = [ZERO];
    let mut vr = CMat::zeros(nu, nu);
    let mut rwork = vec![0.0; 2 * nu.max(1)];
    let mut wq = [ZERO];
    let q = -1;
    let mut info = 0;
    let one = 1i32;
    unsafe {
        lapack_sys::zgeev_(
            &ch(b'N'), &ch(b'V'), &n, ptr(&mut a), &n.max(1), ptr(&mut w), ptr(&mut vl), &one,
            ptr(vr.data_mut()), &n.max(1), ptr(&mut wq), &q, rwork.as_mut_ptr(), &mut info,
        );
    }
    let lw = (wq[0].re as i32).max(1);
    let mut work = vec![ZERO; lw as usize];
    unsafe {
        lapack_sys::zgeev_(
            &ch(b'N'), &ch(b'V'), &n, ptr(&mut a), &n.max(1), ptr(&mut w), ptr(&mut vl), &one,
            ptr(vr.data_mut()), &n.max(1), ptr(&mut work), &lw, rwork.as_mut_ptr(), &mut info,
        );
    }
    if info > 0 {
        return Err(Error::NoConvergence { what: "zgeev" });
    }
    if info < 0 {
        return Err(Error::Lapack { routine: "zgeev", info });
    }
    Ok((w, vr))
}

/// Singular values, descending.
pub fn zgesvd(a: &CMat) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    if k == 0 {
        return Ok(vec![]);
    }
    let (mi, ni) = (m as i32, n as i32);
    let mut data = a.data().to_vec();
    let mut s = vec![0.0; k];
    let mut dummy = [ZERO];
    let one = 1i32;
    let job = ch(b'N');
    let mut rwork = vec![0.0; 5 * k];
    let mut info = 0i32;
    let mut wq = [ZERO];
    let q = -1i32;
    unsafe {
        lapack_sys::zgesvd_(
            &job, &job, &mi, &ni, ptr(&mut data), &mi, s.as_mut_ptr(), ptr(&mut dummy), &one,
            ptr(&mut dummy), &one, ptr(&mut wq), &q, rwork.as_mut_ptr(), &mut info,
        );
    }
    let lw = (wq[0].re as i32).max(1);
    let mut work = vec![ZERO; lw as usize];
    unsafe {
        lapack_sys::zgesvd_(
            &job, &job, &mi, &ni, ptr(&mut data), &mi, s.as_mut_ptr(), ptr(&mut dummy), &one,
            ptr(&mut dummy), &one, ptr(&mut work), &lw, rwork.as_mut_ptr(), &mut info,
        );
    }
    match info {
        0 => Ok(s),
        i if i > 0 => Err(Error::NoConvergence { what: "zgesvd" }),
        i => Err(Error::Lapack { routine: "zgesvd", info: i }),
    }
}
