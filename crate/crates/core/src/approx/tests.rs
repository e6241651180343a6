use super::*;
use crate::model::{DemandClass, OperationMode};
use crate::scenarios::{single_link, two_link};

fn unit(widths: &[usize]) -> Vec<DemandClass> {
    widths.iter().map(|&width| DemandClass { width, holding_rate: 1.0 }).collect()
}

#[test]
fn departure_rate_examples() {
    let g = departure_rates(10, &unit(&[3, 4]));
    assert_eq!(g[6], vec![2.0, 0.0]);
    assert_eq!(g[7], vec![1.0, 1.0]);
    assert!(g[1].is_empty());
    let g = departure_rates(12, &unit(&[3, 4]));
    assert_eq!(g[12], vec![2.0, 1.5]);
    let mut classes = unit(&[3, 4]);
    classes[1].holding_rate = 2.0;
    assert_eq!(departure_rates(10, &classes)[7], vec![1.0, 2.0]);
}

#[test]
fn single_link_setup_rates() {
    let c = single_link(7, &[3, 4], 0.6);
    let model = acceptance_model(&c, Variant::Ees).unwrap();
    let links = vec![LinkOccupancyModel::new(0, vec![0, 3, 4, 6, 7], 7, 2)];
    let alpha = setup_rates(0, &links, &c, &model);
    let lambda = 0.3;
    assert!((alpha[0][3] - 0.8 * lambda).abs() < 1e-15);
    assert!((alpha[1][3] - 0.4 * lambda).abs() < 1e-15);
    assert_eq!(alpha[1][4], 0.0);
    assert_eq!(alpha[0][0], lambda);
}

#[test]
fn balance_at_three_slices() {
    let (l1, l2) = (0.7, 0.4);
    let gamma = departure_rates(7, &unit(&[3, 4]));
    let valid = vec![0, 3, 4, 6, 7];
    let counts = CountTable::closed_form(7, &[3, 4]);
    let mut alpha = vec![vec![0.0; 8]; 2];
    for &x in &valid {
        alpha[0][x] = l1 * p_accept_ees(&counts, x, 0);
        alpha[1][x] = l2 * p_accept_ees(&counts, x, 1);
    }
    let pi = reduced_gbe_solve(&[3, 4], &valid, &alpha, &gamma, 1e-12).unwrap();
    let lhs = (0.8 * l1 + 0.4 * l2 + 1.0) * pi[3];
    let rhs = l1 * pi[0] + 2.0 * pi[6] + pi[7];
    assert!((lhs - rhs).abs() < 1e-12, "{lhs} {rhs}");
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let zero = vec![vec![0.0; 8]; 2];
    let pi = reduced_gbe_solve(&[3, 4], &valid, &zero, &gamma, 1e-12).unwrap();
    assert_eq!(pi[0], 1.0);
}

#[test]
fn zero_load_converges_immediately() {
    for variant in [Variant::Ees, Variant::Soc, Variant::Uniform] {
        let r = fixed_point(&two_link(10, &[3, 4], 0.0), variant).unwrap();
        assert!(r.converged && r.iterations <= 2);
        assert!(r.blocking.per_od.iter().flatten().all(|&b| b == 0.0));
    }
}

#[test]
fn single_link_values() {
    let c = single_link(10, &[3, 4], 0.1);
    let ees = fixed_point(&c, Variant::Ees).unwrap();
    let soc = fixed_point(&c, Variant::Soc).unwrap();
    assert!((ees.blocking.overall - 6.8e-3).abs() < 1e-4, "{}", ees.blocking.overall);
    assert!((soc.blocking.overall - 2.7e-3).abs() < 1e-4, "{}", soc.blocking.overall);
    let ees = fixed_point(&single_link(10, &[3, 4], 0.6), Variant::Ees).unwrap();
    assert!((ees.blocking.overall - 9.5e-2).abs() < 1e-3, "{}", ees.blocking.overall);
}

#[test]
fn trace_csv() {
    let r = fixed_point(&two_link(10, &[3, 4], 0.1), Variant::Ees).unwrap();
    let mut buf = Vec::new();
    r.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iteration,max_delta,xbar_0,xbar_1\n"));
    assert_eq!(text.lines().count(), r.iterations + 1);
}

fn links_after(config: &ScenarioConfig, variant: Variant) -> (AcceptanceModel, Vec<LinkOccupancyModel>) {
    let mut c = config.clone();
    c.settings.max_iters = 3;
    let r = fixed_point(&c, variant).unwrap();
    (acceptance_model(&c, variant).unwrap(), r.links)
}

#[test]
fn factorized_matches_nested() {
    for mode in OperationMode::ALL {
        for variant in [Variant::Ees, Variant::Soc, Variant::Uniform] {
            let c = two_link(10, &[3, 4], 0.9).with_mode(mode);
            let (model, links) = links_after(&c, variant);
            let a = network_blocking(&links, &c, &model);
            let b = network_blocking_nested(&links, &c, &model);
            for (x, y) in a.per_od.iter().flatten().zip(b.per_od.iter().flatten()) {
                assert!((x - y).abs() < 1e-12, "{mode} {variant}");
            }
            for j in 0..2 {
                let a = setup_rates(j, &links, &c, &model);
                let b = setup_rates_nested(j, &links, &c, &model);
                for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                    assert!((x - y).abs() < 1e-12, "{mode} {variant} link {j}");
                }
            }
        }
    }
}

#[test]
fn uniform_two_link() {
    let r = fixed_point(&two_link(10, &[3, 4], 0.1), Variant::Uniform).unwrap();
    assert!((r.blocking.overall - 2.7e-2).abs() < 1e-3, "{}", r.blocking.overall);
}
