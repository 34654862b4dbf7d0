//! Native reference implementations of the corpus kernels, written directly
//! in Rust from each kernel's description. They share no code with the IR
//! interpreters.

#![allow(dead_code)]

use neura::corpus::{KernelCase, KernelInput};
use neura::interp::{Memory, Outcome, Payload};

/// Evaluates `case` natively. Returns the return value and final memory.
pub fn oracle_eval(case: &KernelCase, input: &KernelInput) -> Outcome {
    let a: Vec<i64> = input.args.iter().map(|p| p.as_int()).collect();
    let mut m = input.memory.cells.clone();
    let r = match case.name.as_str() {
        "accumulate" => (0..8).map(|k| m[(a[0] + k) as usize]).fold(0i64, i64::wrapping_add),
        "sum_n" => (0..a[0].max(0)).map(|k| m[(a[1] + k) as usize]).fold(0i64, i64::wrapping_add),
        "relu" => {
            for k in 0..a[0].max(0) {
                let p = (a[1] + k) as usize;
                if m[p] < 0 {
                    m[p] = 0;
                }
            }
            a[0]
        }
        "dot" => (0..a[0].max(0))
            .map(|k| m[(a[1] + k) as usize].wrapping_mul(m[(a[2] + k) as usize]))
            .fold(0i64, i64::wrapping_add),
        "conv1d" => {
            for k in 0..a[0].max(0) {
                let p = (a[1] + k) as usize;
                m[(a[2] + k) as usize] = 2 * m[p] - m[p + 1] + 3 * m[p + 2];
            }
            a[0]
        }
        "gemv" => {
            let (n, cols, base_a, x, y) = (a[0], a[1], a[2], a[3], a[4]);
            for i in 0..n.max(0) {
                let mut s = 0i64;
                for j in 0..cols.max(0) {
                    s += m[(base_a + i * cols + j) as usize] * m[(x + j) as usize];
                }
                m[(y + i) as usize] = s;
            }
            n
        }
        "visit" => {
            let mut count = 0;
            for k in 0..a[0].max(0) {
                let p = (a[1] + k) as usize;
                if m[p] == 0 {
                    m[p] = 1;
                    count += 1;
                }
            }
            count
        }
        "dtw" => {
            let (n, cols, va, vb, row) = (a[0], a[1], a[2], a[3], a[4]);
            for i in 0..n.max(0) {
                let x = m[(va + i) as usize];
                let mut prev = 1000;
                for j in 0..cols.max(0) {
                    let cost = (x - m[(vb + j) as usize]).abs();
                    let up = m[(row + j) as usize];
                    let v = cost + up.min(prev);
                    m[(row + j) as usize] = v;
                    prev = v;
                }
            }
            n
        }
        "merge" => {
            let (n, k_m, va, vb, o) = (a[0], a[1], a[2], a[3], a[4]);
            let (mut i, mut j) = (0, 0);
            for k in 0..n + k_m {
                let take_a = j >= k_m || (i < n && m[(va + i) as usize] <= m[(vb + j) as usize]);
                if take_a {
                    m[(o + k) as usize] = m[(va + i) as usize];
                    i += 1;
                } else {
                    m[(o + k) as usize] = m[(vb + j) as usize];
                    j += 1;
                }
            }
            (n + k_m).max(0)
        }
        "memloop" => {
            let (ctr, acc) = ((a[1] + 16) as usize, (a[1] + 17) as usize);
            m[ctr] = 0;
            m[acc] = 0;
            while m[ctr] < a[0] {
                m[acc] += m[(a[1] + m[ctr]) as usize];
                m[ctr] += 1;
            }
            loop {
                m[ctr] -= 1;
                m[acc] += 2;
                if m[ctr] <= 0 {
                    break;
                }
            }
            m[acc]
        }
        "dowhile" => {
            let (mut i, mut s) = (0i64, 0i64);
            loop {
                s += m[(a[1] + i) as usize];
                i += 1;
                if i >= a[0] {
                    break s;
                }
            }
        }
        "absdiff" => {
            let d = (a[0] - a[1]).abs();
            if d > 10 {
                d / 2
            } else {
                d
            }
        }
        "tri" => {
            let mut total = 0;
            for i in 0..a[0].max(0) {
                let s: i64 = (0..=i).map(|j| m[(a[1] + j) as usize]).sum();
                m[(a[2] + i) as usize] = s;
                total += s;
            }
            total
        }
        "floyd" => {
            let (i1, k) = (a[0], a[1]);
            let i2 = i1 + 1;
            let d1k = m[(i1 * 8 + k) as usize];
            let d2k = m[(i2 * 8 + k) as usize];
            for j in 0..8 {
                let dkj = m[(k * 8 + j) as usize];
                let p1 = (i1 * 8 + j) as usize;
                m[p1] = m[p1].min(d1k + dkj);
                let p2 = (i2 * 8 + j) as usize;
                m[p2] = m[p2].min(d2k + dkj);
            }
            d1k
        }
        other => panic!("no oracle for kernel '{}'", other),
    };
    Outcome { ret: Some(Payload::Int(r)), memory: Memory { cells: m } }
}
