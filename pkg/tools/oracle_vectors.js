// Recompute the frozen reference vectors in tests/vectors with independent
// JavaScript implementations (circomlibjs, js-sha3).
//
//   npm install circomlibjs@0.1.7 js-sha3@0.13.0
//   node tools/oracle_vectors.js          # report mismatches, exit 1 if any
//   node tools/oracle_vectors.js --write  # rewrite the expected outputs
//
// Inputs (poseidon inputs, keccak messages, curve scalars) are taken from
// the existing files; only the outputs are recomputed.
const fs = require("fs");
const path = require("path");
const { buildPoseidonReference, buildBabyjub } = require("circomlibjs");
const { keccak256 } = require("js-sha3");

const dir = path.join(__dirname, "..", "tests", "vectors");
const load = (name) => JSON.parse(fs.readFileSync(path.join(dir, name)));

(async () => {
  const write = process.argv.includes("--write");
  const poseidon = await buildPoseidonReference();
  const bj = await buildBabyjub();
  const files = {
    "poseidon.json": (v) => ({
      inputs: v.inputs,
      output: poseidon.F.toString(poseidon(v.inputs.map(BigInt))),
    }),
    "keccak256.json": (v) => ({
      message: v.message,
      digest: keccak256(Buffer.from(v.message, "hex")),
    }),
    "babyjub.json": (v) => {
      const pt = bj.mulPointEscalar(bj.Base8, BigInt(v.scalar));
      return {
        scalar: v.scalar,
        x: bj.F.toString(pt[0]),
        y: bj.F.toString(pt[1]),
        packed: Buffer.from(bj.packPoint(pt)).toString("hex"),
      };
    },
  };
  let bad = 0;
  for (const [name, compute] of Object.entries(files)) {
    const data = load(name);
    const fresh = data.vectors.map(compute);
    fresh.forEach((v, i) => {
      if (JSON.stringify(v) !== JSON.stringify(data.vectors[i])) {
        bad++;
        console.log(`${name}[${i}] differs`, data.vectors[i], v);
      }
    });
    if (write) {
      data.vectors = fresh;
      fs.writeFileSync(path.join(dir, name), JSON.stringify(data, null, 1) + "\n");
    }
    console.log(`${name}: ${fresh.length} vectors`);
  }
  if (bad && !write) process.exit(1);
})();
