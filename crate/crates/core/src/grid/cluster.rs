//! Binary obstacle map, 5×5 inflation, and connected-component labelling.

/// Binary grid marking cells whose obstacle belief cleared the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ObsMap {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl ObsMap {
    /// Thresholds a scalar field strictly: `cell = field > threshold`.
    pub fn from_field(field: &[f64], rows: usize, cols: usize, threshold: f64) -> Self {
        debug_assert_eq!(field.len(), rows * cols);
        Self { rows, cols, cells: field.iter().map(|&v| v > threshold).collect() }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }
}

/// 5×5 maximum filter (binary dilation): a cell is set when any cell within
/// a 2-cell Chebyshev radius is set. Windows clip at the borders. Run as two
/// separable 1×5 passes.
pub fn max_filter_5x5(map: &ObsMap) -> ObsMap {
    let (rows, cols) = (map.rows, map.cols);
    let mut horiz = vec![false; rows * cols];
    for r in 0..rows {
        let row = &map.cells[r * cols..(r + 1) * cols];
        let out = &mut horiz[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let lo = c.saturating_sub(2);
            let hi = (c + 2).min(cols - 1);
            out[c] = row[lo..=hi].iter().any(|&b| b);
        }
    }
    let mut cells = vec![false; rows * cols];
    for c in 0..cols {
        for r in 0..rows {
            let lo = r.saturating_sub(2);
            let hi = (r + 2).min(rows - 1);
            cells[r * cols + c] = (lo..=hi).any(|rr| horiz[rr * cols + c]);
        }
    }
    ObsMap { rows, cols, cells }
}

/// Cluster labelling of a binary map: `0` is background, ids `1..=count`
/// name 8-connected components in the order their first cell is met by a
/// raster scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterMap {
    pub rows: usize,
    pub cols: usize,
    pub ids: Vec<u32>,
    pub count: u32,
}

impl ClusterMap {
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.ids[row * self.cols + col]
    }
}

/// 8-connected component labelling by flood fill, seeds visited in raster
/// order so ids are reproducible.
pub fn label_clusters(map: &ObsMap) -> ClusterMap {
    let (rows, cols) = (map.rows, map.cols);
    let mut ids = vec![0u32; rows * cols];
    let mut count = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    for seed in 0..rows * cols {
        if !map.cells[seed] || ids[seed] != 0 {
            continue;
        }
        count += 1;
        ids[seed] = count;
        stack.push(seed);
        while let Some(i) = stack.pop() {
            let r = i / cols;
            let c = i % cols;
            let r_lo = r.saturating_sub(1);
            let r_hi = (r + 1).min(rows - 1);
            let c_lo = c.saturating_sub(1);
            let c_hi = (c + 1).min(cols - 1);
            for rr in r_lo..=r_hi {
                for cc in c_lo..=c_hi {
                    let j = rr * cols + cc;
                    if map.cells[j] && ids[j] == 0 {
                        ids[j] = count;
                        stack.push(j);
                    }
                }
            }
        }
    }
    ClusterMap { rows, cols, ids, count }
}
