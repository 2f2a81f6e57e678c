use num_complex::Complex32;
use qgraph::dtn::dtn_matrix;
use qgraph::format::{parse_function, parse_graph};
use qgraph::resolvent::solve_full;

const INTERVAL: &str = "\
[vertex]
id = 1
condition = standard

[vertex]
id = 2
condition = dirichlet

[edge]
id = 1
endpoints = 1, 2
length = 1

[lead]
id = 1
vertex = 1
";

#[test]
fn interval_dtn_in_single_precision() {
    let g = parse_graph::<f32>(INTERVAL).unwrap();
    for lam in [Complex32::new(2.0, 0.5), Complex32::new(7.0, 1.0), Complex32::new(30.0, 0.2)] {
        let k = lam.sqrt();
        let exact = k * k.cos() / k.sin();
        let got = dtn_matrix(&g, lam).unwrap().matrix[(0, 0)];
        assert!((got - exact).norm() < 1e-4 * exact.norm().max(1.0), "{lam}: {got} vs {exact}");
    }
}

#[test]
fn single_and_double_precision_agree() {
    let f_text = "[lead]\nid = 1\npiece = 0.5, 1.5 : 0, 0, 16, -32, 16\n";
    let g32 = parse_graph::<f32>(INTERVAL).unwrap();
    let g64 = parse_graph::<f64>(INTERVAL).unwrap();
    let v32 = solve_full(&g32, &parse_function::<f32>(f_text).unwrap(), Complex32::new(3.0, 0.4)).unwrap();
    let v64 = solve_full(&g64, &parse_function::<f64>(f_text).unwrap(), num_complex::Complex64::new(3.0, 0.4)).unwrap();
    let err = ((v32.value.re as f64 - v64.value.re).powi(2) + (v32.value.im as f64 - v64.value.im).powi(2)).sqrt();
    assert!(err < 1e-4 * v64.value.norm(), "{} vs {}", v32.value, v64.value);
    assert!(v32.valid);
}
