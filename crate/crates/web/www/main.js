import init, { point_cloud_svg, defect_curve, glue_space } from "./pkg/persp_web.js";

const $ = (id) => document.getElementById(id);

function fail(el, e) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e);
  el.appendChild(p);
}

function drawCloud() {
  const lambda = $("cloud-lambda").value;
  $("cloud-lambda-v").textContent = lambda;
  try {
    $("cloud").innerHTML = point_cloud_svg($("cloud-graph").value, `geom:${lambda}`, Number($("cloud-r").value));
  } catch (e) {
    fail($("cloud"), e);
  }
}

// defect and bound on a log scale
function plot(rows) {
  const w = 520, h = 260, pad = 30;
  const pts = rows.filter((r) => typeof r.defect === "number" && r.defect > 0);
  const all = rows.map((r) => r.bound).concat(pts.map((r) => r.defect));
  const lo = Math.log(Math.min(...all)), hi = Math.log(Math.max(...all));
  const x = (r) => pad + ((r - rows[0].radius) / Math.max(1, rows.length - 1)) * (w - 2 * pad);
  const y = (v) => h - pad - ((Math.log(v) - lo) / Math.max(1e-9, hi - lo)) * (h - 2 * pad);
  const line = (list, key) => list.map((r) => `${x(r.radius).toFixed(2)},${y(r[key]).toFixed(2)}`).join(" ");
  return `<svg width="${w}" height="${h}" xmlns="http://www.w3.org/2000/svg">
    <polyline points="${line(rows, "bound")}" fill="none" stroke="#999" stroke-dasharray="4 3"/>
    <polyline points="${line(pts, "defect")}" fill="none" stroke="#c33" stroke-width="2"/>
    <text x="${pad}" y="14" font-size="12">red: sampled defect, dashed: 2·T(R−1)</text>
  </svg>`;
}

function runDefect() {
  try {
    const rows = JSON.parse(defect_curve($("defect-graph").value, $("defect-f").value, Number($("defect-r").value)));
    const table = rows
      .map((r) => `<tr><td>${r.radius}</td><td>${r.pairs}</td><td>${r.defect ?? "–"}</td><td>${r.bound}</td></tr>`)
      .join("");
    $("defect").innerHTML = plot(rows) + `<table><tr><th>R</th><th>pairs</th><th>defect</th><th>bound</th></tr>${table}</table>`;
  } catch (e) {
    fail($("defect"), e);
  }
}

function runGlue() {
  try {
    $("glue-out").textContent = JSON.stringify(JSON.parse(glue_space($("glue-in").value)), null, 2);
  } catch (e) {
    $("glue-out").textContent = String(e);
  }
}

$("glue-in").value = JSON.stringify(
  {
    source: { points: ["a", "b"], closed_sets: [[], ["b"], ["a", "b"]] },
    target: { points: ["p"], closed_sets: [[], ["p"]] },
    table: [
      { closure: ["b"], value: [] },
      { closure: ["a", "b"], value: ["p"] },
    ],
  },
  null,
  2,
);

await init();
for (const id of ["cloud-graph", "cloud-lambda", "cloud-r"]) $(id).addEventListener("input", drawCloud);
$("defect-go").addEventListener("click", runDefect);
$("glue-go").addEventListener("click", runGlue);
drawCloud();
runDefect();
runGlue();
