//! Finite constructions around Steiner triple systems and free Steiner
//! quasigroups: validation, completion, normal forms, closures and rank
//! bounds, extension axioms, amalgamation, free independence, and explicit
//! witness systems.

pub mod amalgam;
pub mod budget;
pub mod canon;
pub mod closure;
pub mod completion;
pub mod embed;
pub mod error;
pub mod free;
pub mod generic;
pub mod io;
pub mod seed;
pub mod system;
pub mod witnesses;

pub use budget::Budget;
pub use error::{Error, Result};
pub use free::{FreeUniverse, RawTerm, Term};
pub use system::{PartialSts, PointId};

#[cfg(test)]
pub(crate) mod testing {
    use crate::system::PartialSts;

    pub fn fano() -> PartialSts {
        PartialSts::build(
            &["1", "2", "3", "4", "5", "6", "7"],
            &[
                ["1", "2", "3"],
                ["1", "4", "5"],
                ["1", "6", "7"],
                ["2", "4", "6"],
                ["2", "5", "7"],
                ["3", "4", "7"],
                ["3", "5", "6"],
            ],
        )
        .unwrap()
    }

    /// The affine plane of order 3 on points `(x, y)` named `xy`.
    pub fn aff9() -> PartialSts {
        let name = |x: usize, y: usize| format!("{x}{y}");
        let mut blocks = Vec::new();
        for x1 in 0..3 {
            for y1 in 0..3 {
                for x2 in 0..3 {
                    for y2 in 0..3 {
                        if (x1, y1) >= (x2, y2) {
                            continue;
                        }
                        let (x3, y3) = ((6 - x1 - x2) % 3, (6 - y1 - y2) % 3);
                        if (x2, y2) < (x3, y3) {
                            blocks.push(vec![name(x1, y1), name(x2, y2), name(x3, y3)]);
                        }
                    }
                }
            }
        }
        let points = (0..9).map(|i| name(i / 3, i % 3)).collect();
        PartialSts::from_raw(points, blocks).unwrap()
    }
}
