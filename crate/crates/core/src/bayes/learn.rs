//! Maximum-likelihood CPT estimation from complete records.

use super::{Assignment, BayesNet, BnError, Cpt};

/// Re-estimate every CPT from complete records with additive smoothing.
///
/// A parent configuration never seen in the data keeps its current row
/// when `smoothing` is zero.
pub fn fit_cpts(net: &BayesNet, records: &[Assignment], smoothing: f64) -> Result<BayesNet, BnError> {
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(BnError::InvalidSmoothing(smoothing));
    }
    if records.is_empty() && smoothing == 0.0 {
        return Err(BnError::EmptyData);
    }
    let mut counts: Vec<Vec<Vec<f64>>> = net
        .cpts()
        .iter()
        .map(|c| vec![vec![0.0; c.rows[0].len()]; c.rows.len()])
        .collect();

    let mut states = vec![0usize; net.len()];
    for record in records {
        for key in record.keys() {
            if net.index_of(key).is_none() {
                return Err(BnError::UnknownNode(key.clone()));
            }
        }
        for (i, node) in net.nodes().iter().enumerate() {
            let state = record
                .get(&node.id)
                .ok_or_else(|| BnError::IncompleteAssignment(node.id.clone()))?;
            states[i] = node.state_index(state).ok_or_else(|| BnError::UnknownState {
                node: node.id.clone(),
                state: state.clone(),
            })?;
        }
        for i in 0..net.len() {
            counts[i][net.row_index(i, &states)][states[i]] += 1.0;
        }
    }

    let cpts = net
        .cpts()
        .iter()
        .zip(counts)
        .map(|(cpt, table)| {
            let rows = cpt
                .rows
                .iter()
                .zip(table)
                .map(|(old, row)| {
                    let total: f64 = row.iter().sum::<f64>() + smoothing * row.len() as f64;
                    if total == 0.0 {
                        old.clone()
                    } else {
                        row.iter().map(|c| (c + smoothing) / total).collect()
                    }
                })
                .collect();
            Cpt {
                node: cpt.node.clone(),
                parent_order: cpt.parent_order.clone(),
                rows,
            }
        })
        .collect();
    BayesNet::from_parts(
        net.nodes().to_vec(),
        None,
        cpts,
        net.objective().map(str::to_string),
    )
}
