//! Variable names. Warm starts match variables across systems by these
//! names, so they encode stream or node, role and period.

pub fn flow(s: &str, comp: &str, p: usize) -> String {
    format!("F[{s}.{comp}]@{p}")
}

pub fn total(s: &str, p: usize) -> String {
    format!("F[{s}]@{p}")
}

pub fn fraction(s: &str, comp: &str, p: usize) -> String {
    format!("x[{s}.{comp}]@{p}")
}

pub fn temperature(s: &str, p: usize) -> String {
    format!("T[{s}]@{p}")
}

pub fn duty(n: &str, p: usize) -> String {
    format!("Q[{n}]@{p}")
}

pub fn exchanger_duty(n: &str, p: usize) -> String {
    format!("Qx[{n}]@{p}")
}

pub fn split(n: &str, outlet: &str, p: usize) -> String {
    format!("alpha[{n}.{outlet}]@{p}")
}

pub fn holdup(n: &str, comp: &str, p: usize) -> String {
    format!("inv[{n}.{comp}]@{p}")
}

pub fn holdup_total(n: &str, p: usize) -> String {
    format!("inv[{n}]@{p}")
}

pub fn input(n: &str, i: usize, p: usize) -> String {
    format!("u[{n}.{i}]@{p}")
}

pub fn local(n: &str, s: &str, comp: &str, p: usize) -> String {
    format!("Fin[{n}.{s}.{comp}]@{p}")
}
