//! Wall-clock and per-thread CPU timers used for solver phase accounting.
//!
//! CPU time is read from `CLOCK_THREAD_CPUTIME_ID` so that measurements stay
//! meaningful when several runs execute on different worker threads.

use std::time::Instant;

/// CPU seconds consumed by the calling thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Runs `f`, adding its thread-CPU cost to `acc`.
pub fn accumulate_cpu<T>(acc: &mut f64, f: impl FnOnce() -> T) -> T {
    let start = thread_cpu_seconds();
    let out = f();
    *acc += thread_cpu_seconds() - start;
    out
}

/// Paired wall/CPU stopwatch.
pub struct Stopwatch {
    wall: Instant,
    cpu: f64,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            wall: Instant::now(),
            cpu: thread_cpu_seconds(),
        }
    }

    /// (wall seconds, thread-CPU seconds) since start.
    pub fn elapsed(&self) -> (f64, f64) {
        (
            self.wall.elapsed().as_secs_f64(),
            thread_cpu_seconds() - self.cpu,
        )
    }
}
