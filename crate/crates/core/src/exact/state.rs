use std::fmt;

/// Contents of one slice on one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    /// First slice of a block held by a connection of OD `od`, class `class`.
    Start {
        od: usize,
        class: usize,
    },
    Continuation,
}

const FREE: u32 = 0;
const CONT: u32 = 1;

/// Per-link slice occupancy of the whole network. Cells are stored row-major
/// (link by link) as integer codes; two states are the same iff their codes are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkState {
    capacity: usize,
    num_classes: usize,
    cells: Box<[u32]>,
}

impl NetworkState {
    pub fn empty(num_links: usize, capacity: usize, num_classes: usize) -> Self {
        NetworkState { capacity, num_classes, cells: vec![FREE; num_links * capacity].into_boxed_slice() }
    }

    pub fn num_links(&self) -> usize {
        self.cells.len() / self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Row-major canonical encoding.
    pub fn encoding(&self) -> &[u32] {
        &self.cells
    }

    fn decode(&self, code: u32) -> Cell {
        match code {
            FREE => Cell::Free,
            CONT => Cell::Continuation,
            c => {
                let v = (c - 2) as usize;
                Cell::Start { od: v / self.num_classes, class: v % self.num_classes }
            }
        }
    }

    fn start_code(&self, od: usize, class: usize) -> u32 {
        (2 + od * self.num_classes + class) as u32
    }

    fn row(&self, link: usize) -> &[u32] {
        &self.cells[link * self.capacity..(link + 1) * self.capacity]
    }

    pub fn cell(&self, link: usize, slot: usize) -> Cell {
        self.decode(self.row(link)[slot])
    }

    pub fn cells(&self, link: usize) -> impl Iterator<Item = Cell> + '_ {
        self.row(link).iter().map(|&c| self.decode(c))
    }

    pub fn is_free(&self, link: usize, start: usize, width: usize) -> bool {
        start + width <= self.capacity && self.row(link)[start..start + width].iter().all(|&c| c == FREE)
    }

    /// Start indices `s` with `[s, s+width)` free on `link`, ascending.
    pub fn free_starts(&self, link: usize, width: usize) -> Vec<usize> {
        let row = self.row(link);
        let mut out = Vec::new();
        let mut run = 0;
        for (i, &c) in row.iter().enumerate() {
            run = if c == FREE { run + 1 } else { 0 };
            if run >= width {
                out.push(i + 1 - width);
            }
        }
        out
    }

    pub fn place(&mut self, link: usize, start: usize, width: usize, od: usize, class: usize) {
        debug_assert!(self.is_free(link, start, width));
        let code = self.start_code(od, class);
        let base = link * self.capacity + start;
        self.cells[base] = code;
        for c in &mut self.cells[base + 1..base + width] {
            *c = CONT;
        }
    }

    pub fn release(&mut self, link: usize, start: usize, width: usize) {
        let base = link * self.capacity + start;
        for c in &mut self.cells[base..base + width] {
            *c = FREE;
        }
    }

    /// Start indices of blocks tagged `(od, class)` on `link`.
    pub fn block_starts(&self, link: usize, od: usize, class: usize) -> Vec<usize> {
        let code = self.start_code(od, class);
        self.row(link).iter().enumerate().filter(|(_, &c)| c == code).map(|(i, _)| i).collect()
    }

    pub fn occupied(&self, link: usize) -> usize {
        self.row(link).iter().filter(|&&c| c != FREE).count()
    }

    pub fn largest_free_block(&self, link: usize) -> usize {
        largest_free_block(self.cells(link))
    }
}

/// Length of the longest run of free cells (`f_m`).
pub fn largest_free_block(cells: impl IntoIterator<Item = Cell>) -> usize {
    let (mut best, mut run) = (0, 0);
    for c in cells {
        run = if c == Cell::Free { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

/// Links are separated by `|`; `.` is free, `+` continues a block and
/// `o:k` starts one (0-based OD and class).
impl fmt::Display for NetworkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for link in 0..self.num_links() {
            if link > 0 {
                f.write_str("|")?;
            }
            for (i, c) in self.cells(link).enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                match c {
                    Cell::Free => f.write_str(".")?,
                    Cell::Continuation => f.write_str("+")?,
                    Cell::Start { od, class } => write!(f, "{od}:{class}")?,
                }
            }
        }
        Ok(())
    }
}
