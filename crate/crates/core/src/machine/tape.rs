use super::spec::{Symbol, BLANK};

/// Two-way unbounded tape with a lease set.
///
/// Storage is a dense window over the written range; positions outside it
/// read as blank. A cell is leased once written and stays leased until freed.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    origin: i64,
    cells: Vec<Symbol>,
    leased: Vec<bool>,
    leased_count: u64,
    head: i64,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// A tape with `contents` written (and leased) from position 0.
    pub fn from_symbols(contents: &[Symbol]) -> Self {
        let mut tape = Tape::new();
        tape.load(0, contents);
        tape
    }

    pub fn load(&mut self, start: i64, contents: &[Symbol]) {
        for (i, &s) in contents.iter().enumerate() {
            self.write(start + i as i64, s);
        }
    }

    pub fn head(&self) -> i64 {
        self.head
    }

    pub fn set_head(&mut self, pos: i64) {
        self.head = pos;
    }

    pub fn move_head(&mut self, delta: i64) {
        self.head += delta;
    }

    fn index(&self, pos: i64) -> Option<usize> {
        let i = pos - self.origin;
        if i >= 0 && (i as usize) < self.cells.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    fn ensure(&mut self, pos: i64) -> usize {
        if self.cells.is_empty() {
            self.origin = pos;
            self.cells.push(BLANK);
            self.leased.push(false);
            return 0;
        }
        if pos < self.origin {
            let grow = ((self.origin - pos) as usize).max(self.cells.len());
            let mut cells = vec![BLANK; grow];
            cells.extend_from_slice(&self.cells);
            let mut leased = vec![false; grow];
            leased.extend_from_slice(&self.leased);
            self.cells = cells;
            self.leased = leased;
            self.origin -= grow as i64;
        }
        let i = (pos - self.origin) as usize;
        if i >= self.cells.len() {
            let len = (i + 1).max(self.cells.len() * 2);
            self.cells.resize(len, BLANK);
            self.leased.resize(len, false);
        }
        i
    }

    pub fn read(&self, pos: i64) -> Symbol {
        match self.index(pos) {
            Some(i) if self.leased[i] => self.cells[i],
            _ => BLANK,
        }
    }

    pub fn read_head(&self) -> Symbol {
        self.read(self.head)
    }

    pub fn is_leased(&self, pos: i64) -> bool {
        self.index(pos).map(|i| self.leased[i]).unwrap_or(false)
    }

    /// Writes and leases a cell. Returns true if the cell was newly leased.
    pub fn write(&mut self, pos: i64, symbol: Symbol) -> bool {
        let i = self.ensure(pos);
        self.cells[i] = symbol;
        if self.leased[i] {
            false
        } else {
            self.leased[i] = true;
            self.leased_count += 1;
            true
        }
    }

    /// Returns the cell to the blank, unleased state.
    pub fn free(&mut self, pos: i64) -> bool {
        match self.index(pos) {
            Some(i) if self.leased[i] => {
                self.leased[i] = false;
                self.cells[i] = BLANK;
                self.leased_count -= 1;
                true
            }
            _ => false,
        }
    }

    /// U, the number of leased cells.
    pub fn leased_count(&self) -> u64 {
        self.leased_count
    }

    /// Leased cells in position order.
    pub fn contents(&self) -> Vec<(i64, Symbol)> {
        self.leased
            .iter()
            .enumerate()
            .filter(|(_, l)| **l)
            .map(|(i, _)| (self.origin + i as i64, self.cells[i]))
            .collect()
    }

    /// Lowest and highest leased positions.
    pub fn span(&self) -> Option<(i64, i64)> {
        let first = self.leased.iter().position(|l| *l)?;
        let last = self.leased.iter().rposition(|l| *l)?;
        Some((self.origin + first as i64, self.origin + last as i64))
    }

    /// Symbols of `len` cells starting at `from`, blanks included.
    pub fn window(&self, from: i64, len: usize) -> Vec<Symbol> {
        (0..len as i64).map(|i| self.read(from + i)).collect()
    }
}

impl PartialEq for Tape {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.contents() == other.contents()
    }
}
