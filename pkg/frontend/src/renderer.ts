// WebGL point-sprite renderer: one draw call for the whole node field.
// Authors render as circles, datasets and bio entities as squares (the
// fragment shader discards outside the disc when the shape flag is 0).
// Buffer packing is kept as pure functions so it is testable without GL.

import type { Camera } from './camera.js';
import type { NodeRecord } from './types.js';

export const SHAPE_CIRCLE = 0;
export const SHAPE_SQUARE = 1;

export function shapeFlag(kind: NodeRecord['kind']): number {
  return kind === 'author' ? SHAPE_CIRCLE : SHAPE_SQUARE;
}

// base fill per kind (r, g, b in 0..1)
export const KIND_COLORS: Record<NodeRecord['kind'], [number, number, number]> = {
  author: [0.72, 0.45, 0.2],
  dataset: [0.35, 0.65, 0.35],
  bio_entity: [0.55, 0.4, 0.75],
};

export const HIGHLIGHT_COLOR: [number, number, number] = [0.15, 0.4, 1.0]; // blue
export const SELECTION_COLOR: [number, number, number] = [0.95, 0.2, 0.25];

export interface PackedNodes {
  count: number;
  position: Float32Array; // x, y per node
  size: Float32Array;
  shape: Float32Array; // SHAPE_CIRCLE | SHAPE_SQUARE
  color: Float32Array; // r, g, b per node
  state: Float32Array; // 0 normal, 1 highlighted, 2 selected (mutable)
  visible: Float32Array; // 0 hidden, 1 shown (mutable)
}

export function packNodes(nodes: NodeRecord[]): PackedNodes {
  const n = nodes.length;
  const packed: PackedNodes = {
    count: n,
    position: new Float32Array(n * 2),
    size: new Float32Array(n),
    shape: new Float32Array(n),
    color: new Float32Array(n * 3),
    state: new Float32Array(n),
    visible: new Float32Array(n).fill(1),
  };
  nodes.forEach((node, i) => {
    packed.position[i * 2] = node.x;
    packed.position[i * 2 + 1] = node.y;
    packed.size[i] = node.size;
    packed.shape[i] = shapeFlag(node.kind);
    const [r, g, b] = KIND_COLORS[node.kind];
    packed.color[i * 3] = r;
    packed.color[i * 3 + 1] = g;
    packed.color[i * 3 + 2] = b;
  });
  return packed;
}

export function applyState(
  packed: PackedNodes,
  indexOf: Map<string, number>,
  highlights: Set<string>,
  selection: string | null,
): void {
  packed.state.fill(0);
  for (const id of highlights) {
    const i = indexOf.get(id);
    if (i !== undefined) packed.state[i] = 1;
  }
  if (selection !== null) {
    const i = indexOf.get(selection);
    if (i !== undefined) packed.state[i] = 2;
  }
}

export function applyVisibility(packed: PackedNodes, visible: Uint8Array): void {
  for (let i = 0; i < packed.count; i++) packed.visible[i] = visible[i];
}

export const VERTEX_SHADER = `#version 300 es
precision highp float;
in vec2 a_position;
in float a_size;
in float a_shape;
in vec3 a_color;
in float a_state;
in float a_visible;
uniform vec2 u_center;
uniform float u_zoom;
uniform vec2 u_viewport;
uniform float u_sizeScale;
out vec3 v_color;
out float v_shape;
out float v_state;
void main() {
  vec2 screen = (a_position - u_center) * u_zoom;
  vec2 clip = screen / (u_viewport * 0.5);
  gl_Position = vec4(clip.x, clip.y, 0.0, 1.0);
  float px = a_size * u_sizeScale * clamp(sqrt(u_zoom), 0.35, 6.0);
  gl_PointSize = a_visible > 0.5 ? max(px, 1.5) : 0.0;
  v_color = a_color;
  v_shape = a_shape;
  v_state = a_state;
}`;

export const FRAGMENT_SHADER = `#version 300 es
precision highp float;
in vec3 v_color;
in float v_shape;
in float v_state;
out vec4 outColor;
void main() {
  vec2 d = gl_PointCoord - vec2(0.5);
  if (v_shape < 0.5 && dot(d, d) > 0.25) {
    discard; // circle: clip the point sprite to the inscribed disc
  }
  vec3 color = v_color;
  if (v_state > 1.5) {
    color = vec3(0.95, 0.2, 0.25);
  } else if (v_state > 0.5) {
    color = vec3(0.15, 0.4, 1.0);
  }
  float edge = v_shape < 0.5 ? smoothstep(0.25, 0.23, dot(d, d)) : 1.0;
  outColor = vec4(color, 0.92 * edge);
}`;

export class PointRenderer {
  private program: WebGLProgram;
  private buffers: Record<string, WebGLBuffer> = {};
  private uniforms: Record<string, WebGLUniformLocation> = {};
  private count = 0;

  constructor(private gl: WebGL2RenderingContext) {
    this.program = this.link(VERTEX_SHADER, FRAGMENT_SHADER);
    gl.useProgram(this.program);
    for (const name of ['u_center', 'u_zoom', 'u_viewport', 'u_sizeScale']) {
      const loc = gl.getUniformLocation(this.program, name);
      if (!loc) throw new Error(`missing uniform ${name}`);
      this.uniforms[name] = loc;
    }
    gl.enable(gl.BLEND);
    gl.blendFunc(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA);
  }

  private compile(kind: number, source: string): WebGLShader {
    const gl = this.gl;
    const shader = gl.createShader(kind);
    if (!shader) throw new Error('shader allocation failed');
    gl.shaderSource(shader, source);
    gl.compileShader(shader);
    if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
      throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
    }
    return shader;
  }

  private link(vertSrc: string, fragSrc: string): WebGLProgram {
    const gl = this.gl;
    const program = gl.createProgram();
    if (!program) throw new Error('program allocation failed');
    gl.attachShader(program, this.compile(gl.VERTEX_SHADER, vertSrc));
    gl.attachShader(program, this.compile(gl.FRAGMENT_SHADER, fragSrc));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    return program;
  }

  private attach(name: string, data: Float32Array, components: number, dynamic = false): void {
    const gl = this.gl;
    let buffer = this.buffers[name];
    if (!buffer) {
      const created = gl.createBuffer();
      if (!created) throw new Error('buffer allocation failed');
      buffer = this.buffers[name] = created;
    }
    gl.bindBuffer(gl.ARRAY_BUFFER, buffer);
    gl.bufferData(gl.ARRAY_BUFFER, data, dynamic ? gl.DYNAMIC_DRAW : gl.STATIC_DRAW);
    const loc = gl.getAttribLocation(this.program, name);
    if (loc >= 0) {
      gl.enableVertexAttribArray(loc);
      gl.vertexAttribPointer(loc, components, gl.FLOAT, false, 0, 0);
    }
  }

  upload(packed: PackedNodes): void {
    this.count = packed.count;
    this.gl.useProgram(this.program);
    this.attach('a_position', packed.position, 2);
    this.attach('a_size', packed.size, 1);
    this.attach('a_shape', packed.shape, 1);
    this.attach('a_color', packed.color, 3);
    this.attach('a_state', packed.state, 1, true);
    this.attach('a_visible', packed.visible, 1, true);
  }

  updateState(packed: PackedNodes): void {
    this.attach('a_state', packed.state, 1, true);
  }

  updateVisibility(packed: PackedNodes): void {
    this.attach('a_visible', packed.visible, 1, true);
  }

  draw(camera: Camera, width: number, height: number, sizeScale = 1.6): void {
    const gl = this.gl;
    gl.viewport(0, 0, width, height);
    gl.clearColor(0.07, 0.08, 0.1, 1.0);
    gl.clear(gl.COLOR_BUFFER_BIT);
    if (!this.count) return;
    gl.useProgram(this.program);
    gl.uniform2f(this.uniforms.u_center, camera.cx, camera.cy);
    gl.uniform1f(this.uniforms.u_zoom, camera.zoom);
    gl.uniform2f(this.uniforms.u_viewport, width, height);
    gl.uniform1f(this.uniforms.u_sizeScale, sizeScale);
    gl.drawArrays(gl.POINTS, 0, this.count);
  }
}
