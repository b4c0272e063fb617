import init, { channelView, errorRateSweep, udaAlignment } from "./pkg/flash_demo.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const $ = (id) => document.getElementById(id);

function inputs() {
  return {
    cell: $("cell").value,
    family: $("family").value,
    npe: Number($("npe").value),
    thours: Number($("thours").value),
  };
}

// Maps data coordinates onto a canvas with a fixed margin.
function frame(canvas, xmin, xmax, ymin, ymax, logY) {
  const ctx = canvas.getContext("2d");
  const m = 40;
  const w = canvas.width - 2 * m;
  const h = canvas.height - 2 * m;
  const ty = logY ? Math.log10 : (y) => y;
  const y0 = ty(ymin);
  const y1 = ty(ymax);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(m, m, w, h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(xmin.toPrecision(3), m, canvas.height - m + 14);
  ctx.fillText(xmax.toPrecision(3), m + w - 30, canvas.height - m + 14);
  ctx.fillText(ymax.toPrecision(2), 2, m + 4);
  ctx.fillText(ymin.toPrecision(2), 2, m + h);
  return {
    ctx,
    x: (x) => m + ((x - xmin) / (xmax - xmin)) * w,
    y: (y) => m + h - ((ty(Math.max(y, ymin)) - y0) / (y1 - y0)) * h,
    top: m,
    bottom: m + h,
  };
}

function line(f, xs, ys, color, dash = []) {
  const { ctx } = f;
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(f.x(x), f.y(ys[i])) : ctx.moveTo(f.x(x), f.y(ys[i]))));
  ctx.stroke();
  ctx.setLineDash([]);
}

function vline(f, x, color, dash = []) {
  const { ctx } = f;
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(f.x(x), f.top);
  ctx.lineTo(f.x(x), f.bottom);
  ctx.stroke();
  ctx.setLineDash([]);
}

function legend(f, items) {
  items.forEach(([text, color], i) => {
    f.ctx.fillStyle = color;
    f.ctx.fillText(text, 60, 56 + 14 * i);
  });
}

function guarded(out, fn) {
  try {
    out.classList.remove("err");
    fn();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function plotPdf() {
  guarded($("pdf-info"), () => {
    const p = inputs();
    const v = JSON.parse(channelView(p.cell, p.family, p.npe, p.thours));
    const ymax = Math.max(...v.pdfs.flat());
    const f = frame($("pdf"), v.voltages[0], v.voltages.at(-1), 0, ymax * 1.05, false);
    v.pdfs.forEach((c, s) => line(f, v.voltages, c, COLORS[s % COLORS.length]));
    v.optimal.forEach((t) => vline(f, t, "#000"));
    v.mmi.forEach((t) => vline(f, t, "#c00", [4, 3]));
    legend(f, [["optimal thresholds", "#000"], ["MMI thresholds", "#c00"]]);
    $("pdf-info").textContent =
      `optimal: ${v.optimal.map((t) => t.toFixed(4)).join(", ")}  BER ${v.ber_optimal.toExponential(3)}  MI ${v.mi_optimal.toFixed(4)}\n` +
      `MMI:     ${v.mmi.map((t) => t.toFixed(4)).join(", ")}  BER ${v.ber_mmi.toExponential(3)}  MI ${v.mi_mmi.toFixed(4)}`;
  });
}

function plotSweep() {
  guarded($("sweep-info"), () => {
    const p = inputs();
    const s = JSON.parse(errorRateSweep(p.cell, p.family, p.thours));
    const all = [...s.optimum, ...s.source_thresholds, ...s.aligned].filter((x) => x > 0);
    const f = frame($("sweep"), s.n_pe[0], s.n_pe.at(-1), Math.min(...all), Math.max(...all) * 2, true);
    line(f, s.n_pe, s.optimum, "#000");
    line(f, s.n_pe, s.source_thresholds, "#d62728");
    line(f, s.n_pe, s.aligned, "#1f77b4", [5, 3]);
    legend(f, [["optimum", "#000"], ["fresh-cell thresholds", "#d62728"], ["mean-aligned thresholds", "#1f77b4"]]);
    const last = s.n_pe.length - 1;
    $("sweep-info").textContent =
      `at N_PE=${s.n_pe[last].toFixed(0)}: optimum ${s.optimum[last].toExponential(3)}, ` +
      `fresh ${s.source_thresholds[last].toExponential(3)}, aligned ${s.aligned[last].toExponential(3)}`;
  });
}

function plotUda() {
  guarded($("uda-info"), () => {
    const p = inputs();
    const a = JSON.parse(udaAlignment(p.cell, p.family, p.npe, p.thours, Number($("samples").value), Number($("seed").value)));
    const centers = a.bin_edges.slice(0, -1).map((e, i) => 0.5 * (e + a.bin_edges[i + 1]));
    const ymax = Math.max(...a.target_counts, ...a.aligned_counts);
    const f = frame($("uda"), a.bin_edges[0], a.bin_edges.at(-1), 0, ymax * 1.05, false);
    line(f, centers, a.target_counts, "#d62728");
    line(f, centers, a.aligned_counts, "#1f77b4");
    a.centroids.forEach((c) => vline(f, c, "#d62728", [2, 3]));
    a.source_means.forEach((c) => vline(f, c, "#1f77b4", [2, 3]));
    legend(f, [["target reads / centroids", "#d62728"], ["aligned reads / fresh means", "#1f77b4"]]);
    $("uda-info").textContent =
      `k-means iterations ${a.iterations}, objective ${a.objective_history.map((o) => o.toPrecision(4)).join(" -> ")}\n` +
      `centroids  ${a.centroids.map((c) => c.toFixed(4)).join(", ")}\n` +
      `true means ${a.true_means.map((c) => c.toFixed(4)).join(", ")}\n` +
      `BER: optimum ${a.ber_optimum.toExponential(3)}, aligned ${a.ber_aligned.toExponential(3)}, fresh thresholds ${a.ber_source.toExponential(3)}`;
  });
}

await init();
$("run-pdf").onclick = plotPdf;
$("run-sweep").onclick = plotSweep;
$("run-uda").onclick = plotUda;
plotPdf();
