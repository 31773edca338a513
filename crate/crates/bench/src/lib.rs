//! Shared fixtures for the engine benchmarks.

use ctp_core::gen::{self, GenProfile, Shape};
use ctp_core::{parse, System};

/// Dense system where `p` sends only before time 1 and `q` receives
/// only from time 1 on, with `k` receptions.
pub fn intro(k: usize) -> System {
    let finals: Vec<String> = (0..=k).map(|i| format!("q{i}")).collect();
    let recvs: String = (0..k)
        .map(|i| format!("    q{i} -> q{} : recv(c, m) when y >= 1;\n", i + 1))
        .collect();
    let text = format!(
        "system intro{k} {{
  delay dense;
  msgs {{ m }};
  channel c : p -> q;
  process p {{ init a; final a; clocks {{ x }}; a -> a : send(c, m) when x < 1; }}
  process q {{ init q0; final {};
    clocks {{ y }};
{recvs}  }}
  relax {{ clocks }};
}}
",
        finals.join(", ")
    );
    parse(&text).expect("fixture parses")
}

/// Discrete pipeline of `n` processes passing one message down the line.
pub fn pipeline(n: usize) -> System {
    let mut text = String::from("system pipeline {\n  delay discrete;\n  msgs { m };\n");
    for i in 1..n {
        text.push_str(&format!("  channel c{i} : p{} -> p{i};\n", i - 1));
    }
    for i in 0..n {
        let mut body = String::from("init a; final c; a -> a : tick; b -> b : tick; c -> c : tick;");
        if i == 0 {
            body.push_str(" a -> b : internal(start);");
        } else {
            body.push_str(&format!(" a -> b : recv(c{i}, m);"));
        }
        if i + 1 < n {
            body.push_str(&format!(" b -> c : send(c{}, m);", i + 1));
        } else {
            body.push_str(" b -> c : internal(done);");
        }
        text.push_str(&format!("  process p{i} {{ {body} }}\n"));
    }
    text.push_str("}\n");
    parse(&text).expect("fixture parses")
}

/// Seeded random systems of the given shape.
pub fn generated(shape: Shape, dense: bool, count: usize) -> Vec<System> {
    let profile = if dense {
        GenProfile::dense(shape)
    } else {
        GenProfile::tick(shape)
    };
    (0..)
        .filter_map(|seed| gen::generate(&profile, seed).ok())
        .take(count)
        .collect()
}
