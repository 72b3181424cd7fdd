/** Browser entry point: wires the canvas editor, the control panels and
 * the audio chain to a SynthClient.  All logic that does not need the
 * DOM lives in the sibling modules.
 */

import { FrameTracker, PlaybackScheduler, webAudioSink } from "./audio.js";
import { SynthClient } from "./client.js";
import {
  CanvasMap,
  canvasToUnit,
  hitEdge,
  hitVertex,
  insertVertexAfter,
  moveVertex,
  pointInPolygon,
  randomPolygon,
  removeVertex,
  unitToCanvas,
} from "./polygon.js";
import { GRID_SIZE, StatusFrame } from "./protocol.js";
import { Pt, rasterizeChecked } from "./raster.js";
import { SpectrogramModel, columnToBytes } from "./spectrogram.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const plate = el<HTMLCanvasElement>("plate");
const plateCtx = plate.getContext("2d")!;
const spectro = el<HTMLCanvasElement>("spectro");
const spectroCtx = spectro.getContext("2d")!;
const impulsePad = el<HTMLCanvasElement>("impulse");
const impulseCtx = impulsePad.getContext("2d")!;
const statusEl = el<HTMLSpanElement>("status");
const shapeInfo = el<HTMLSpanElement>("shape-info");
const map: CanvasMap = { width: plate.width, height: plate.height };

// ---------------------------------------------------------------------------
// sliders

interface SliderSpec {
  key: string;
  label: string;
  lo: number;
  hi: number;
  log?: boolean;
  value: number;
  fmt: (v: number) => string;
}

const values: Record<string, number> = {};

function addSlider(host: HTMLElement, spec: SliderSpec, onInput: () => void) {
  const row = document.createElement("div");
  row.className = "slider";
  const name = document.createElement("label");
  name.textContent = spec.label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = "0";
  input.max = "1000";
  const toPos = (v: number) =>
    spec.log
      ? (Math.log(v / spec.lo) / Math.log(spec.hi / spec.lo)) * 1000
      : ((v - spec.lo) / (spec.hi - spec.lo)) * 1000;
  const toVal = (p: number) =>
    spec.log
      ? spec.lo * Math.pow(spec.hi / spec.lo, p / 1000)
      : spec.lo + (spec.hi - spec.lo) * (p / 1000);
  input.value = String(toPos(spec.value));
  const out = document.createElement("output");
  values[spec.key] = spec.value;
  out.textContent = spec.fmt(spec.value);
  input.addEventListener("input", () => {
    values[spec.key] = toVal(Number(input.value));
    out.textContent = spec.fmt(values[spec.key]);
    onInput();
  });
  row.append(name, input, out);
  host.append(row);
}

const si = (v: number) => v.toExponential(2);
const fix = (d: number) => (v: number) => v.toFixed(d);

let materialDirty = false;
let textureDirty = false;

const materialHost = el<HTMLDivElement>("material-sliders");
addSlider(materialHost, { key: "rho", label: "density", lo: 500, hi: 15000, value: 2700, fmt: fix(0) }, () => { materialDirty = true; });
addSlider(materialHost, { key: "E", label: "stiffness", lo: 8e9, hi: 5e10, log: true, value: 2e10, fmt: si }, () => { materialDirty = true; });
addSlider(materialHost, { key: "nu", label: "poisson", lo: 0.1, hi: 0.4, value: 0.3, fmt: fix(3) }, () => { materialDirty = true; });
addSlider(materialHost, { key: "alpha_R", label: "damp lo", lo: 1, hi: 10, value: 5, fmt: fix(2) }, () => { materialDirty = true; });
addSlider(materialHost, { key: "beta_R", label: "damp hi", lo: 3e-7, hi: 2e-6, log: true, value: 1e-6, fmt: si }, () => { materialDirty = true; });

const strikeHost = el<HTMLDivElement>("strike-sliders");
addSlider(strikeHost, { key: "beta_K", label: "hardness", lo: 0, hi: 4, value: 1, fmt: fix(2) }, () => {});
addSlider(strikeHost, { key: "amplitude", label: "strength", lo: 0.05, hi: 2, value: 1, fmt: fix(2) }, () => {});

const textureHost = el<HTMLDivElement>("texture-sliders");
addSlider(textureHost, { key: "roughness", label: "roughness", lo: 0, hi: 1, value: 0.5, fmt: fix(2) }, () => { textureDirty = true; });
addSlider(textureHost, { key: "size", label: "grain", lo: 4, hi: 256, log: true, value: 64, fmt: fix(0) }, () => { textureDirty = true; });

// control-change frames are rate-limited from one place
setInterval(() => {
  if (!client) return;
  if (materialDirty) {
    materialDirty = false;
    client.sendMaterial({
      rho: values.rho, E: values.E, nu: values.nu,
      alpha_R: values.alpha_R, beta_R: values.beta_R,
    });
  }
  if (textureDirty) {
    textureDirty = false;
    client.sendTexture(values.roughness, Math.round(values.size), 0);
  }
}, 80);

// ---------------------------------------------------------------------------
// plate editor

let polygon: Pt[] = randomPolygon(Math.random);
let editMode = true;
let dragIndex = -1;
let scraping = false;
let lastSent = 0;

function drawPlate() {
  plateCtx.clearRect(0, 0, plate.width, plate.height);
  const r = rasterizeChecked(polygon);
  const cell = plate.width / GRID_SIZE;
  plateCtx.fillStyle = r.ok ? "#1d2633" : "#33201d";
  for (let row = 0; row < GRID_SIZE; row++) {
    for (let col = 0; col < GRID_SIZE; col++) {
      if (r.cells[row * GRID_SIZE + col]) {
        // grid row 0 is the bottom edge; canvas y runs downward
        plateCtx.fillRect(col * cell, plate.height - (row + 1) * cell,
                          cell + 0.5, cell + 0.5);
      }
    }
  }
  plateCtx.strokeStyle = r.ok ? "#4fa3ff" : "#ff7a5c";
  plateCtx.lineWidth = 1.5;
  plateCtx.beginPath();
  polygon.forEach((p, i) => {
    const c = unitToCanvas(p, map);
    if (i === 0) plateCtx.moveTo(c.x, c.y);
    else plateCtx.lineTo(c.x, c.y);
  });
  plateCtx.closePath();
  plateCtx.stroke();
  if (editMode) {
    for (const p of polygon) {
      const c = unitToCanvas(p, map);
      plateCtx.fillStyle = "#d8dce2";
      plateCtx.beginPath();
      plateCtx.arc(c.x, c.y, 4, 0, Math.PI * 2);
      plateCtx.fill();
    }
  }
  shapeInfo.textContent = r.ok ? "" : r.problem ?? "";
}

function canvasPoint(ev: PointerEvent): Pt {
  const rect = plate.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * plate.width,
    y: ((ev.clientY - rect.top) / rect.height) * plate.height,
  };
}

plate.addEventListener("pointerdown", (ev) => {
  const c = canvasPoint(ev);
  const u = canvasToUnit(c, map);
  if (editMode) {
    dragIndex = hitVertex(u, polygon, 8 / plate.width);
    if (dragIndex < 0) {
      const edge = hitEdge(u, polygon, 6 / plate.width);
      if (edge >= 0) {
        polygon = insertVertexAfter(polygon, edge, u);
        dragIndex = (edge + 1) % polygon.length;
      }
    }
  } else if (client) {
    scraping = false;
    plate.setPointerCapture(ev.pointerId);
  }
  drawPlate();
});

plate.addEventListener("pointermove", (ev) => {
  const c = canvasPoint(ev);
  if (editMode) {
    if (dragIndex >= 0) {
      polygon = moveVertex(polygon, dragIndex, canvasToUnit(c, map));
      drawPlate();
    }
    return;
  }
  if (client && ev.buttons & 1) {
    const now = performance.now();
    if (now - lastSent >= 10) {
      lastSent = now;
      scraping = true;
      const u = canvasToUnit(c, map);
      client.sendScrape(clamp01(u.x), clamp01(u.y), now / 1000);
    }
  }
});

plate.addEventListener("pointerup", (ev) => {
  const c = canvasPoint(ev);
  if (editMode) {
    dragIndex = -1;
    return;
  }
  if (client && !scraping) {
    const u = canvasToUnit(c, map);
    if (pointInPolygon(u, polygon)) {
      client.sendHit(clamp01(u.x), clamp01(u.y), values.beta_K,
                     values.amplitude);
    }
  }
  scraping = false;
});

plate.addEventListener("dblclick", (ev) => {
  if (!editMode) return;
  const rect = plate.getBoundingClientRect();
  const c = {
    x: ((ev.clientX - rect.left) / rect.width) * plate.width,
    y: ((ev.clientY - rect.top) / rect.height) * plate.height,
  };
  const i = hitVertex(canvasToUnit(c, map), polygon, 8 / plate.width);
  if (i >= 0) {
    polygon = removeVertex(polygon, i);
    drawPlate();
  }
});

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

el<HTMLButtonElement>("random").addEventListener("click", () => {
  polygon = randomPolygon(Math.random);
  drawPlate();
});

el<HTMLButtonElement>("apply").addEventListener("click", () => {
  const r = rasterizeChecked(polygon);
  if (!r.ok) {
    shapeInfo.textContent = r.problem ?? "bad shape";
    return;
  }
  client?.sendShape(r.cells);
});

const modeBtn = el<HTMLButtonElement>("mode");
modeBtn.addEventListener("click", () => {
  editMode = !editMode;
  modeBtn.textContent = editMode ? "mode: edit" : "mode: play";
  drawPlate();
});

// ---------------------------------------------------------------------------
// custom impulse pad

const impulseSamples = new Float64Array(impulsePad.width);
let impulseDrawn = false;

function drawImpulse() {
  impulseCtx.clearRect(0, 0, impulsePad.width, impulsePad.height);
  impulseCtx.strokeStyle = "#4fa3ff";
  impulseCtx.beginPath();
  const mid = impulsePad.height / 2;
  for (let x = 0; x < impulsePad.width; x++) {
    const y = mid - impulseSamples[x] * (mid - 2);
    if (x === 0) impulseCtx.moveTo(x, y);
    else impulseCtx.lineTo(x, y);
  }
  impulseCtx.stroke();
}

let impulseDragX = -1;
impulsePad.addEventListener("pointerdown", (ev) => {
  impulsePad.setPointerCapture(ev.pointerId);
  impulseDragX = -1;
  paintImpulse(ev);
});
impulsePad.addEventListener("pointermove", (ev) => {
  if (ev.buttons & 1) paintImpulse(ev);
});

function paintImpulse(ev: PointerEvent) {
  const rect = impulsePad.getBoundingClientRect();
  const x = Math.round(((ev.clientX - rect.left) / rect.width) * (impulsePad.width - 1));
  const v = 1 - 2 * ((ev.clientY - rect.top) / rect.height);
  const xi = Math.min(impulsePad.width - 1, Math.max(0, x));
  // fill the gap since the last event so fast strokes stay continuous
  if (impulseDragX >= 0 && Math.abs(xi - impulseDragX) > 1) {
    const step = xi > impulseDragX ? 1 : -1;
    for (let k = impulseDragX + step; k !== xi; k += step) {
      impulseSamples[k] = Math.min(1, Math.max(-1, v));
    }
  }
  impulseSamples[xi] = Math.min(1, Math.max(-1, v));
  impulseDragX = xi;
  impulseDrawn = true;
  drawImpulse();
}

el<HTMLButtonElement>("impulse-send").addEventListener("click", () => {
  if (!impulseDrawn || !client) return;
  client.sendCustomImpulse(Array.from(impulseSamples));
});
el<HTMLButtonElement>("impulse-clear").addEventListener("click", () => {
  impulseSamples.fill(0);
  impulseDrawn = false;
  drawImpulse();
  client?.sendCustomImpulse(null);
});

// ---------------------------------------------------------------------------
// connection and audio

let client: SynthClient | null = null;
let audioCtx: AudioContext | null = null;
let scheduler: PlaybackScheduler | null = null;
const tracker = new FrameTracker();
let spectroModel: SpectrogramModel | null = null;
let spectroX = 0;

function setStatus(text: string, bad = false) {
  statusEl.textContent = text;
  statusEl.className = bad ? "bad" : "";
}

function refreshStatus() {
  const s = tracker.stats;
  setStatus(
    `frames ${s.frames}  gaps ${s.gaps}  stale ${s.stale}  ` +
    `invalid ${client?.counts.invalid ?? 0}  ` +
    `buffered ${(scheduler?.buffered() ?? 0).toFixed(2)}s`,
  );
}

function paintColumns(cols: Float64Array[]) {
  for (const col of cols) {
    const bytes = columnToBytes(col);
    const img = spectroCtx.createImageData(1, spectro.height);
    for (let y = 0; y < spectro.height; y++) {
      // low bins at the bottom, warm channel weighting
      const bin = Math.floor(((spectro.height - 1 - y) / spectro.height) * bytes.length);
      const v = bytes[bin];
      const o = y * 4;
      img.data[o] = v;
      img.data[o + 1] = Math.floor(v * 0.72);
      img.data[o + 2] = Math.floor(64 + v * 0.35);
      img.data[o + 3] = 255;
    }
    spectroCtx.putImageData(img, spectroX, 0);
    spectroX = (spectroX + 1) % spectro.width;
    spectroCtx.fillStyle = "#4fa3ff";
    spectroCtx.fillRect(spectroX, 0, 1, spectro.height);
  }
}

function onStatus(frame: StatusFrame) {
  if (frame.sample_rate && !audioCtx) {
    audioCtx = new AudioContext({ sampleRate: frame.sample_rate });
    scheduler = new PlaybackScheduler(webAudioSink(audioCtx));
    spectroModel = new SpectrogramModel(1024, 512);
  }
  setStatus(`connected  sr=${frame.sample_rate ?? "?"}  ` +
            `block=${frame.block_size ?? "?"}`);
}

el<HTMLButtonElement>("connect").addEventListener("click", () => {
  client?.close();
  audioCtx?.close();
  audioCtx = null;
  scheduler = null;
  client = new SynthClient(el<HTMLInputElement>("url").value, {
    onStatus,
    onServerError: (e) => setStatus(`server error: ${e.code} ${e.detail ?? ""}`, true),
    onProtocolError: (e) => setStatus(`protocol error: ${e.message}`, true),
    onClose: () => setStatus("disconnected", true),
    onAudio: (frame) => {
      if (!tracker.push(frame)) return;
      scheduler?.enqueue(frame.samples);
      if (spectroModel) paintColumns(spectroModel.feed(frame.samples));
      if (tracker.stats.frames % 16 === 0) refreshStatus();
    },
  });
  setStatus("connecting...");
});

drawPlate();
drawImpulse();
