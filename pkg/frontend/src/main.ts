/**
 * Browser entry point: three.js view + control panel wiring.
 *
 * Geometry is not streamed over the bridge (only poses and joint values), so
 * entities are drawn as labeled axis gizmos with a bounding marker; the
 * operator-facing information lives in the overlays: force arrow, witness
 * segment, contact tint and the status/control panel.
 */

import * as THREE from "three";
import { BridgeClient } from "./client.js";
import {
  MANNEQUIN_HANDLE_MODES,
  PIVOT_MODES,
  ROBOT_HANDLE_MODES,
  SCALE_LEVELS,
  FRAME_MODES,
  RECORD_MODES,
  selectEntity,
  setFrameMode,
  setHandleMode,
  setPivotMode,
  setScaleLevel,
  startRecording,
  stopRecording,
  zoom,
} from "./commands.js";
import { TeleopInput } from "./input.js";
import { projectState, type UiSessionView } from "./viewState.js";
import {
  entityColor,
  forceArrowColor,
  forceArrowLengthMm,
  statusLines,
} from "./render.js";

const UI_PORT = Number(new URLSearchParams(location.search).get("port") ?? 7451);

const renderer = new THREE.WebGLRenderer({ antialias: true });
renderer.setSize(window.innerWidth, window.innerHeight);
document.body.appendChild(renderer.domElement);

const scene = new THREE.Scene();
scene.background = new THREE.Color("#1c2128");
scene.add(new THREE.AmbientLight(0xffffff, 0.7));
const sun = new THREE.DirectionalLight(0xffffff, 0.8);
sun.position.set(400, 600, 800);
scene.add(sun);
scene.add(new THREE.GridHelper(2000, 20, 0x334455, 0x223344));

const camera = new THREE.PerspectiveCamera(
  50,
  window.innerWidth / window.innerHeight,
  1,
  20000,
);
camera.position.set(600, 500, 900);
camera.lookAt(0, 0, 0);

const entityNodes = new Map<string, THREE.Group>();
const stylusProxy = new THREE.Mesh(
  new THREE.SphereGeometry(8),
  new THREE.MeshStandardMaterial({ color: "#dddddd" }),
);
scene.add(stylusProxy);
const forceArrow = new THREE.ArrowHelper(
  new THREE.Vector3(0, 0, 1),
  new THREE.Vector3(),
  1,
);
forceArrow.visible = false;
scene.add(forceArrow);
const witnessGeom = new THREE.BufferGeometry().setFromPoints([
  new THREE.Vector3(),
  new THREE.Vector3(),
]);
const witnessLine = new THREE.Line(
  witnessGeom,
  new THREE.LineBasicMaterial({ color: "#ffee66" }),
);
witnessLine.visible = false;
scene.add(witnessLine);

const panel = document.createElement("div");
panel.id = "panel";
panel.style.cssText =
  "position:fixed;top:8px;left:8px;color:#dde;font:12px monospace;" +
  "background:#0009;padding:8px;border-radius:4px;max-width:340px";
document.body.appendChild(panel);

function applyPose(
  obj: THREE.Object3D,
  pose: { position_mm: number[]; quat_wxyz: number[] },
): void {
  obj.position.set(pose.position_mm[0], pose.position_mm[1], pose.position_mm[2]);
  const [w, x, y, z] = pose.quat_wxyz;
  obj.quaternion.set(x, y, z, w);
}

function entityNode(name: string): THREE.Group {
  let node = entityNodes.get(name);
  if (node === undefined) {
    node = new THREE.Group();
    node.add(new THREE.AxesHelper(60));
    const marker = new THREE.Mesh(
      new THREE.BoxGeometry(40, 40, 40),
      new THREE.MeshStandardMaterial({ transparent: true, opacity: 0.6 }),
    );
    marker.name = "marker";
    node.add(marker);
    entityNodes.set(name, node);
    scene.add(node);
  }
  return node;
}

let latest: UiSessionView | null = null;

function draw(view: UiSessionView): void {
  for (const e of view.entities) {
    const node = entityNode(e.name);
    applyPose(node, e.pose);
    const marker = node.getObjectByName("marker") as THREE.Mesh;
    (marker.material as THREE.MeshStandardMaterial).color.set(entityColor(e));
  }
  if (view.stylusPose) applyPose(stylusProxy, view.stylusPose);
  const lengthMm = forceArrowLengthMm(view.forceArrow);
  forceArrow.visible = lengthMm > 0;
  if (forceArrow.visible) {
    forceArrow.position.copy(stylusProxy.position);
    forceArrow.setDirection(new THREE.Vector3(...view.forceArrow.direction));
    forceArrow.setLength(lengthMm);
    forceArrow.setColor(new THREE.Color(forceArrowColor(view.forceArrow)));
  }
  witnessLine.visible = view.witness.visible;
  if (view.witness.visible) {
    witnessGeom.setFromPoints([
      new THREE.Vector3(...view.witness.a),
      new THREE.Vector3(...view.witness.b),
    ]);
  }
  const status = statusLines(view);
  panel.innerHTML =
    `<div>selection: ${status.selection}</div>` +
    `<div>mapping: ${status.mapping}</div>` +
    `<div>recording: ${status.recording}</div>` +
    `<div>status: ${status.contact}</div>` +
    `<div id="controls"></div>`;
  buildControls(view);
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = document.createElement("button");
  b.textContent = label;
  b.style.margin = "2px";
  b.addEventListener("click", onClick);
  return b;
}

function buildControls(view: UiSessionView): void {
  const controls = panel.querySelector("#controls")!;
  for (const e of view.entities) {
    controls.appendChild(button(`select ${e.name}`, () => client.send(selectEntity(e.name))));
  }
  for (const level of SCALE_LEVELS) {
    controls.appendChild(button(level, () => client.send(setScaleLevel(level))));
  }
  for (const mode of FRAME_MODES) {
    controls.appendChild(button(mode, () => client.send(setFrameMode(mode))));
  }
  const selected = view.entities.find((e) => e.selected);
  if (selected?.kind === "solid") {
    for (const mode of PIVOT_MODES) {
      controls.appendChild(button(`pivot:${mode}`, () => client.send(setPivotMode(mode))));
    }
  } else if (selected?.kind === "robot") {
    for (const mode of ROBOT_HANDLE_MODES) {
      controls.appendChild(button(mode, () => client.send(setHandleMode(mode))));
    }
  } else if (selected?.kind === "mannequin") {
    for (const mode of MANNEQUIN_HANDLE_MODES) {
      controls.appendChild(button(mode, () => client.send(setHandleMode(mode))));
    }
  }
  controls.appendChild(button("zoom +", () => client.send(zoom(2))));
  controls.appendChild(button("zoom -", () => client.send(zoom(0.5))));
  if (view.recording.active) {
    controls.appendChild(button("stop rec", () => client.send(stopRecording())));
  } else {
    for (const mode of RECORD_MODES) {
      controls.appendChild(button(`rec ${mode}`, () => client.send(startRecording(mode))));
    }
  }
}

const client = new BridgeClient(`ws://${location.hostname}:${UI_PORT}`);
client.onState = (msg) => {
  latest = projectState(msg);
};

const teleop = new TeleopInput();
let dragging = false;
renderer.domElement.addEventListener("mousedown", () => (dragging = true));
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  client.send(teleop.drag(ev.movementX, ev.movementY, ev.shiftKey));
});
window.addEventListener("wheel", (ev) => {
  client.send(teleop.wheel(ev.deltaY < 0 ? 1 : -1));
});
window.addEventListener("keydown", (ev) => {
  if (ev.key === " ") client.send(teleop.toggleClutch());
  if (ev.key === "b") client.send(teleop.setButton(true));
});
window.addEventListener("keyup", (ev) => {
  if (ev.key === "b") client.send(teleop.setButton(false));
});

window.addEventListener("resize", () => {
  camera.aspect = window.innerWidth / window.innerHeight;
  camera.updateProjectionMatrix();
  renderer.setSize(window.innerWidth, window.innerHeight);
});

function animate(): void {
  requestAnimationFrame(animate);
  if (latest) {
    draw(latest);
    latest = null;
  }
  renderer.render(scene, camera);
}
animate();
