// Loader for the plain C-ABI wasm exports: every call returns a pointer to a
// length-prefixed UTF-8 JSON buffer in linear memory.

let wasm;

async function init() {
  const resp = await fetch("dnls_wasm.wasm");
  const { instance } = await WebAssembly.instantiateStreaming(resp, {});
  wasm = instance.exports;
}

function readJson(ptr) {
  const mem = new Uint8Array(wasm.memory.buffer);
  const len = new DataView(wasm.memory.buffer).getUint32(ptr, true);
  const text = new TextDecoder().decode(mem.subarray(ptr + 4, ptr + 4 + len));
  wasm.buf_free(ptr);
  return JSON.parse(text);
}

const val = (id) => Number(document.getElementById(id).value);

function busy(button, on) {
  button.disabled = on;
  document.body.classList.toggle("busy", on);
}

document.getElementById("sp-run").addEventListener("click", () => {
  const out = readJson(wasm.spectrum_json(val("sp-n"), val("sp-a"), val("sp-alpha")));
  const div = document.getElementById("sp-out");
  if (out.error) { div.textContent = out.error; return; }
  let html = `<p class="note">ω = ${out.omega.toPrecision(6)}, T₀ = ${out.t0.toPrecision(6)}`
    + (out.hypothesis_ok ? "" : " — outside the admissibility hypothesis (cos αζ ≤ 0)") + "</p>";
  html += "<table><tr><th>k</th><th>ν_k</th><th>admissible</th></tr>";
  for (const m of out.modes) {
    html += `<tr><td>${m.k}</td><td>${m.nu === null ? "—" : m.nu.toPrecision(8)}</td><td>${m.admissible ? "yes" : "no"}</td></tr>`;
  }
  div.innerHTML = html + "</table>";
});

document.getElementById("rs-run").addEventListener("click", () => {
  const out = readJson(wasm.resonance_json(
    val("rs-n"), val("rs-k"), val("rs-alpha"), BigInt(val("rs-ell")), BigInt(val("rs-m"))));
  document.getElementById("rs-out").textContent = JSON.stringify(out, null, 2);
});

document.getElementById("ch-run").addEventListener("click", async (ev) => {
  const button = ev.target;
  const stats = document.getElementById("ch-stats");
  busy(button, true);
  stats.textContent = "computing…";
  await new Promise((r) => setTimeout(r, 30)); // let the label paint
  try {
    const out = readJson(wasm.choreography_json(
      val("ch-n"), val("ch-alpha"), val("ch-k"), val("ch-a"), val("ch-xn0"),
      BigInt(val("ch-ell")), BigInt(val("ch-m")),
      Number(document.getElementById("ch-frame").value)));
    if (out.error) {
      stats.textContent = out.error;
      document.getElementById("orbit-svg").innerHTML = "";
    } else {
      stats.textContent =
        `a = ${out.a.toPrecision(6)}, T = ${out.T.toPrecision(6)}, T/T₀ = ${out.ratio.toPrecision(9)}, `
        + `${out.class ?? "?"}, stability ${out.stability ?? "?"}, winding ${out.winding ?? "?"}`;
      document.getElementById("orbit-svg").innerHTML = out.svg;
    }
  } finally {
    busy(button, false);
  }
});

await init();
