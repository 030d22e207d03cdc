import init, { fitDemo, contrastLandscape, compareMethods } from "./pkg/kdr_web.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };

function inputs() {
  return {
    reg: $("reg").value,
    param: Number($("param").value),
    n: Number($("n").value),
    seed: BigInt($("seed").value || 0),
    iters: Number($("iters").value),
  };
}

// Axis-scaled plot of points or a polyline on a canvas.
function plot(canvas, xs, ys, { line = false, xlabel = "", ylabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const lo = (a) => Math.min(...a), hi = (a) => Math.max(...a);
  let [x0, x1, y0, y1] = [lo(xs), hi(xs), lo(ys), hi(ys)];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(xlabel, w / 2 - 20, h - 8);
  ctx.fillText(ylabel, pad, pad - 8);

  ctx.strokeStyle = ctx.fillStyle = "#1f5fa8";
  if (line) {
    ctx.beginPath();
    xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
    ctx.stroke();
  } else {
    xs.forEach((x, i) => ctx.fillRect(px(x) - 1.5, py(ys[i]) - 1.5, 3, 3));
  }
}

function guarded(fn) {
  return () => {
    status("working...");
    // Let the status paint before the synchronous wasm call.
    setTimeout(() => {
      try {
        fn();
        status("");
      } catch (e) {
        status(String(e.message ?? e));
      }
    }, 10);
  };
}

$("fit").onclick = guarded(() => {
  const p = inputs();
  const view = fitDemo(p.reg, p.param, p.n, p.seed, p.iters);
  const z = Array.from(view.projected(0));
  const y = Array.from(view.response);
  const trace = Array.from(view.trace);
  plot($("scatter"), z, y, { xlabel: "x . b0", ylabel: "y" });
  plot($("trace"), trace.map((_, i) => i + 1), trace, { line: true, xlabel: "iteration", ylabel: "objective" });
  const basis = Array.from(view.basis).map((v) => v.toFixed(3));
  $("fitinfo").textContent =
    ` distance to truth ${view.distance.toFixed(3)}; basis (row-major, ${view.dim} column(s)): [${basis.join(", ")}]`;
  view.free();
});

$("land").onclick = guarded(() => {
  const p = inputs();
  const flat = Array.from(contrastLandscape(p.reg, p.param, p.n, p.seed, 31));
  const t = flat.filter((_, i) => i % 2 === 0);
  const v = flat.filter((_, i) => i % 2 === 1);
  plot($("landscape"), t, v, { line: true, xlabel: "angle t (rad)", ylabel: "contrast" });
});

$("cmp").onclick = guarded(() => {
  const p = inputs();
  const means = compareMethods(p.reg, p.param, Number($("reps").value), p.seed, p.iters);
  const rows = ["KDR", "SIR", "SAVE", "pHd"]
    .map((m, i) => `<tr><td>${m}</td><td>${means[i].toFixed(3)}</td></tr>`)
    .join("");
  $("cmptable").innerHTML = `<tr><th>Method</th><th>Mean distance</th></tr>${rows}`;
});

init().then(() => status(""), (e) => status(`failed to load wasm: ${e}`));
