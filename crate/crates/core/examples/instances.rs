//! Instance sources: the seeded generator, the HLI text format, and the bundled
//! CAB-style surrogate with surrogate setup costs.

use hubforge::instance::{
    cab_city_names, generate_random, load_cab, parse_canonical, surrogate_setup, to_canonical,
    GeneratorConfig,
};

fn main() -> hubforge::Result<()> {
    let inst = generate_random(&GeneratorConfig {
        n: 5,
        seed: 7,
        alpha: 0.8,
        ..GeneratorConfig::default()
    });
    let text = to_canonical(&inst);
    print!("{text}");
    let back = parse_canonical(&text)?;
    assert_eq!(back.num_commodities(), inst.num_commodities());
    println!("validation: {:?}", back.validate().warnings);

    let raw = include_str!("../data/cab25_surrogate.txt");
    let n = 10;
    let cab = load_cab(raw, n, 0.5, 1.0, 1.0, &vec![0.0; n])?;
    let cab = cab.with_setup(surrogate_setup(&cab, 150.0))?;
    for (name, f) in cab_city_names().iter().zip(cab.setup()) {
        println!("{name:>14}  setup {f:8.2}");
    }
    println!("{} commodities", cab.num_commodities());
    Ok(())
}
