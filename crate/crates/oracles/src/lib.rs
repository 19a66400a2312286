//! Test oracles. Each module re-derives one behaviour of the engine from its
//! definition, without calling into the engine.

pub mod counting;
pub mod evaluator;
pub mod matching;

/// All combinations of `sizes` as index vectors, first position slowest.
pub fn odometer(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut current = vec![0; sizes.len()];
    for _ in 0..total {
        out.push(current.clone());
        for pos in (0..sizes.len()).rev() {
            current[pos] += 1;
            if current[pos] < sizes[pos] {
                break;
            }
            current[pos] = 0;
        }
    }
    out
}
