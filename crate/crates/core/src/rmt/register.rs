//! Stage-local register arrays.
//!
//! Each register is an array of 32-bit cells indexed by connection and is
//! bound to exactly one pipeline stage. Fast-path access goes through the
//! traversal context, which enforces the manifest; the control plane uses
//! the slow-path accessors, which bypass stage discipline by design.

use serde::{Deserialize, Serialize};

/// Handle to a declared register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegId(pub usize);

#[derive(Clone, Debug)]
pub struct RegisterDecl {
    pub name: &'static str,
    pub stage: usize,
}

#[derive(Clone, Debug)]
pub struct RegisterFile {
    decls: Vec<RegisterDecl>,
    cells: Vec<Vec<u32>>,
    width: usize,
}

impl RegisterFile {
    pub fn new(width: usize) -> RegisterFile {
        RegisterFile { decls: Vec::new(), cells: Vec::new(), width }
    }

    pub fn declare(&mut self, name: &'static str, stage: usize) -> RegId {
        let id = RegId(self.decls.len());
        self.decls.push(RegisterDecl { name, stage });
        self.cells.push(vec![0; self.width]);
        id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn decl(&self, id: RegId) -> &RegisterDecl {
        &self.decls[id.0]
    }

    pub fn decls(&self) -> impl Iterator<Item = (RegId, &RegisterDecl)> {
        self.decls.iter().enumerate().map(|(i, d)| (RegId(i), d))
    }

    pub fn stage_of(&self, id: RegId) -> usize {
        self.decls[id.0].stage
    }

    pub(crate) fn get(&self, id: RegId, conn: u32) -> u32 {
        self.cells[id.0][conn as usize]
    }

    pub(crate) fn set(&mut self, id: RegId, conn: u32, v: u32) {
        self.cells[id.0][conn as usize] = v;
    }

    /// Control-plane read: direct access outside the stage discipline.
    pub fn slow_read(&self, id: RegId, conn: u32) -> u32 {
        self.get(id, conn)
    }

    /// Control-plane write: direct access outside the stage discipline.
    pub fn slow_write(&mut self, id: RegId, conn: u32, v: u32) {
        self.set(id, conn, v);
    }

    pub fn slow_read_i32(&self, id: RegId, conn: u32) -> i32 {
        self.get(id, conn) as i32
    }

    pub fn slow_write_i32(&mut self, id: RegId, conn: u32, v: i32) {
        self.set(id, conn, v as u32);
    }

    /// Snapshot of every cell, used by determinism and ingress-read-only
    /// property checks.
    pub fn snapshot(&self) -> Vec<Vec<u32>> {
        self.cells.clone()
    }
}
