use std::io::{BufRead, Write};

use super::GeometryError;

/// Where a realization came from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RealizationMeta {
    pub spec_hash: String,
    pub placement: String,
    pub seed: Option<u64>,
}

/// Sorted closed intervals in `[0, 1]` with pairwise disjoint interiors.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
    depth: u64,
    meta: RealizationMeta,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>, depth: u64, meta: RealizationMeta) -> Result<Self, GeometryError> {
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(GeometryError::BadIntervals(format!(
                    "interval {i} = [{a}, {b}] is not a closed interval"
                )));
            }
        }
        if let Some(i) = intervals.windows(2).position(|w| w[1].0 < w[0].1) {
            return Err(GeometryError::BadIntervals(format!(
                "intervals {i} and {} overlap or are out of order",
                i + 1
            )));
        }
        Ok(Self { intervals, depth, meta })
    }

    /// The unit interval as a depth-0 set.
    pub fn unit() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
            depth: 0,
            meta: RealizationMeta::default(),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn meta(&self) -> &RealizationMeta {
        &self.meta
    }

    pub fn max_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Index of the first interval whose right end is `>= x`.
    pub fn first_reaching(&self, x: f64) -> usize {
        self.intervals.partition_point(|&(_, b)| b < x)
    }

    /// Whether `x` lies in some interval.
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.get(self.first_reaching(x)).is_some_and(|&(a, _)| a <= x)
    }

    /// Header comment, `a,b` column row, then one row per interval. Values use the
    /// shortest representation that reads back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), GeometryError> {
        let seed = self.meta.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        writeln!(
            out,
            "# depth={} spec_hash={} placement={} seed={}",
            self.depth, self.meta.spec_hash, self.meta.placement, seed
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b"])?;
        for (a, b) in &self.intervals {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self, GeometryError> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| GeometryError::BadIntervals("missing `# depth=...` header line".into()))?;
        let mut depth = None;
        let mut meta = RealizationMeta::default();
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| GeometryError::BadIntervals(format!("header field {field:?} is not key=value")))?;
            match key {
                "depth" => {
                    depth = Some(
                        value
                            .parse()
                            .map_err(|_| GeometryError::BadIntervals(format!("depth {value:?} is not an integer")))?,
                    )
                }
                "spec_hash" => meta.spec_hash = value.to_string(),
                "placement" => meta.placement = value.to_string(),
                "seed" if value == "none" => meta.seed = None,
                "seed" => {
                    meta.seed = Some(
                        value
                            .parse()
                            .map_err(|_| GeometryError::BadIntervals(format!("seed {value:?} is not an integer")))?,
                    )
                }
                _ => {}
            }
        }
        let depth = depth.ok_or_else(|| GeometryError::BadIntervals("header lacks depth".into()))?;
        let mut reader = csv::Reader::from_reader(input);
        let mut intervals = Vec::new();
        for (i, row) in reader.deserialize::<(f64, f64)>().enumerate() {
            let row = row.map_err(|e| GeometryError::BadIntervals(format!("row {}: {e}", i + 1)))?;
            intervals.push(row);
        }
        Self::new(intervals, depth, meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let set = IntervalSet::new(
            vec![(0.0, 1.0 / 9.0), (2.0 / 9.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)],
            2,
            RealizationMeta {
                spec_hash: "abc123".into(),
                placement: "uniform-gap(1)".into(),
                seed: Some(7),
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = IntervalSet::read_csv(&buf[..]).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn rejects_overlap() {
        assert!(IntervalSet::new(vec![(0.0, 0.5), (0.4, 1.0)], 1, RealizationMeta::default()).is_err());
        assert!(IntervalSet::new(vec![(0.0, 0.5), (0.5, 1.0)], 1, RealizationMeta::default()).is_ok());
    }

    #[test]
    fn membership() {
        let set = IntervalSet::new(vec![(0.0, 0.25), (0.5, 0.75)], 1, RealizationMeta::default()).unwrap();
        assert!(set.contains(0.25) && set.contains(0.5) && !set.contains(0.3) && !set.contains(0.8));
        assert_eq!(set.first_reaching(0.3), 1);
    }
}
