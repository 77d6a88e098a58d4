import init, { SliceDemo, lhs_square, speedups } from "./pkg/surrogate_ood_demo.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, xs, series, yRange) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let [lo, hi] = yRange ?? [Infinity, -Infinity];
  if (!yRange) {
    for (const s of series) for (const v of s.ys) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  }
  if (hi <= lo) hi = lo + 1;
  const px = (x) => 10 + (w - 20) * x;
  const py = (y) => h - 10 - (h - 20) * (y - lo) / (hi - lo);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width ?? 1.5;
    ctx.beginPath();
    s.ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
  }
  return { px, py };
}

let demo = null;

function refit() {
  demo?.free();
  demo = new SliceDemo(+$("hi").value, 80, 200, BigInt($("seed").value));
  redraw();
}

function redraw() {
  $("hi-v").value = $("hi").value;
  $("delta-v").value = $("delta").value;
  const n = 300;
  const rows = demo.curve(n, +$("delta").value, 32);
  const col = (j) => Array.from({ length: n }, (_, i) => rows[i * 7 + j]);
  const xs = col(0);
  const { px, py } = plot($("curve"), xs, [
    { ys: col(1), color: "#888", width: 3 },
    { ys: col(2), color: "#c33" },
  ]);
  const ctx = $("curve").getContext("2d");
  ctx.fillStyle = "rgba(0,0,0,.05)";
  ctx.fillRect(px(0), 0, px(+$("hi").value) - px(0), $("curve").height);
  const norm = (ys) => { const m = Math.max(...ys); return ys.map((v) => v / (m || 1)); };
  plot($("profile"), xs, [
    { ys: norm(col(5)), color: "#36c" },
    { ys: norm(col(3)), color: "#393" },
  ], [0, 1]);
}

function drawLhs() {
  const n = +$("n").value;
  $("n-v").value = n;
  const pts = lhs_square(n, BigInt($("lhs-seed").value));
  const c = $("lhs");
  const ctx = c.getContext("2d");
  const s = c.width;
  ctx.clearRect(0, 0, s, s);
  ctx.strokeStyle = "#eee";
  for (let i = 1; i < n; i++) {
    const t = (i / n) * s;
    ctx.beginPath(); ctx.moveTo(t, 0); ctx.lineTo(t, s); ctx.moveTo(0, t); ctx.lineTo(s, t); ctx.stroke();
  }
  ctx.fillStyle = "#c33";
  for (let i = 0; i < n; i++) {
    ctx.beginPath();
    ctx.arc(pts[2 * i] * s, s - pts[2 * i + 1] * s, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function updateSpeedup() {
  $("p-v").value = $("p").value;
  try {
    const [pure, hybrid] = speedups(+$("to").value, $("ts").value / 1000, $("td").value / 1000, +$("p").value);
    $("s-pure").value = pure.toExponential(3);
    $("s-hybrid").value = hybrid.toFixed(2);
  } catch (e) {
    $("s-pure").value = $("s-hybrid").value = String(e.message ?? e);
  }
}

await init();
refit();
drawLhs();
updateSpeedup();
$("fit").onclick = refit;
$("hi").onchange = refit;
$("delta").oninput = redraw;
$("n").oninput = drawLhs;
$("lhs-seed").oninput = drawLhs;
for (const id of ["to", "ts", "td", "p"]) $(id).oninput = updateSpeedup;
