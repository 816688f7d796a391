//! Trajectory export.
//!
//! CSV: header `t,node,v0,…,v{L-1}`, one row per (state, node).
//!
//! Binary (all little-endian):
//!
//! | bytes | field                          |
//! |-------|--------------------------------|
//! | 8     | magic `MBSDETRJ`               |
//! | 4     | u32 format version (= 1)       |
//! | 4     | u32 spatial dimension m        |
//! | 4     | u32 nodes per axis n           |
//! | 4     | u32 ambient dimension L        |
//! | 8     | u64 number of states K+1       |
//!
//! then per state: f64 time, followed by `n^m · L` f64 values, node-major
//! (node index `i + n·j`), component-minor.

use super::{FieldState, TorusGrid, Trajectory};
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 8] = b"MBSDETRJ";
pub const VERSION: u32 = 1;

pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let l = traj.ambient_dim();
    let mut header = String::from("t,node");
    for k in 0..l {
        header.push_str(&format!(",v{k}"));
    }
    writeln!(out, "{header}")?;
    for state in &traj.states {
        for (i, v) in state.nodes().enumerate() {
            let mut line = format!("{:e},{i}", state.t);
            for x in v {
                line.push_str(&format!(",{x:e}"));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let grid = traj.grid();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&(grid.nodes_per_axis() as u32).to_le_bytes())?;
    out.write_all(&(traj.ambient_dim() as u32).to_le_bytes())?;
    out.write_all(&(traj.states.len() as u64).to_le_bytes())?;
    for state in &traj.states {
        out.write_all(&state.t.to_le_bytes())?;
        for x in &state.values {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads the states written by [`write_binary`].
pub fn read_binary<R: Read>(mut input: R) -> Result<Vec<FieldState>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Serialization("bad trajectory magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Serialization(format!("unsupported trajectory version {version}")));
    }
    let m = read_u32(&mut input)? as usize;
    let n = read_u32(&mut input)? as usize;
    let l = read_u32(&mut input)? as usize;
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    let count = u64::from_le_bytes(b) as usize;
    let grid = TorusGrid::new(m, n)?;
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let t = read_f64(&mut input)?;
        let values = (0..grid.len() * l).map(|_| read_f64(&mut input)).collect::<Result<Vec<_>>>()?;
        states.push(FieldState::new(t, grid, l, values));
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use crate::pde::{initialize_from_map, solve_penalized, InitialMap, SolverOptions};
    use crate::Generator;

    fn small_trajectory() -> Trajectory {
        let s2 = Sphere::new(3);
        let h = InitialMap::GreatCircle { k: 1 };
        let init = initialize_from_map(|x| h.evaluate(&s2, x), TorusGrid::new(1, 8).unwrap(), &s2).unwrap();
        solve_penalized(&init, 1e-2, 0.01, 0.005, &Generator::zero(), &s2, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let traj = small_trajectory();
        let mut buf = Vec::new();
        write_binary(&traj, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + traj.states.len() * (8 + 8 * 3 * 8));
        let states = read_binary(&buf[..]).unwrap();
        assert_eq!(states, traj.states);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = Vec::new();
        write_binary(&small_trajectory(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(read_binary(&buf[..]), Err(Error::Serialization(_))));
    }

    #[test]
    fn csv_shape() {
        let traj = small_trajectory();
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,node,v0,v1,v2"));
        assert_eq!(lines.count(), traj.states.len() * 8);
    }
}
