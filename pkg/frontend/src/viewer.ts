// Minimal raw-WebGL triangle-mesh viewer: per-vertex colors and alpha,
// lambert shading with a rim/silhouette term, orbit camera. Falls back to a
// recording stub when a WebGL context is unavailable (tests, jsdom).

export type Mat4 = Float32Array;

export function mat4Identity(): Mat4 {
  const m = new Float32Array(16);
  m[0] = m[5] = m[10] = m[15] = 1;
  return m;
}

export function mat4Multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let sum = 0;
      for (let k = 0; k < 4; k++) sum += a[k * 4 + row] * b[col * 4 + k];
      out[col * 4 + row] = sum;
    }
  }
  return out;
}

export function mat4Perspective(fovY: number, aspect: number, near: number, far: number): Mat4 {
  const f = 1 / Math.tan(fovY / 2);
  const m = new Float32Array(16);
  m[0] = f / aspect;
  m[5] = f;
  m[10] = (far + near) / (near - far);
  m[11] = -1;
  m[14] = (2 * far * near) / (near - far);
  return m;
}

export function orbitView(theta: number, phi: number, distance: number, center: number[]): Mat4 {
  const cp = Math.cos(phi), sp = Math.sin(phi);
  const ct = Math.cos(theta), st = Math.sin(theta);
  const eye = [
    center[0] + distance * cp * st,
    center[1] + distance * sp,
    center[2] + distance * cp * ct,
  ];
  const f = normalize3([center[0] - eye[0], center[1] - eye[1], center[2] - eye[2]]);
  const s = normalize3(cross3(f, [0, 1, 0]));
  const u = cross3(s, f);
  const m = mat4Identity();
  m[0] = s[0]; m[4] = s[1]; m[8] = s[2];
  m[1] = u[0]; m[5] = u[1]; m[9] = u[2];
  m[2] = -f[0]; m[6] = -f[1]; m[10] = -f[2];
  m[12] = -(s[0] * eye[0] + s[1] * eye[1] + s[2] * eye[2]);
  m[13] = -(u[0] * eye[0] + u[1] * eye[1] + u[2] * eye[2]);
  m[14] = f[0] * eye[0] + f[1] * eye[1] + f[2] * eye[2];
  return m;
}

function cross3(a: number[], b: number[]): number[] {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function normalize3(v: number[]): number[] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  return [v[0] / n, v[1] / n, v[2] / n];
}

export interface MeshBuffers {
  id: string;
  positions: Float32Array;
  normals: Float32Array;
  colors: Float32Array; // rgba per vertex
  indices: Uint32Array;
}

export interface Renderer {
  upload(mesh: MeshBuffers): void;
  updateColors(id: string, colors: Float32Array): void;
  remove(id: string): void;
  clearMeshes(): void;
  render(): void;
  projectToScreen(id: string): Float32Array | null;
  readonly camera: { theta: number; phi: number; distance: number };
}

const VERT = `
attribute vec3 aPosition;
attribute vec3 aNormal;
attribute vec4 aColor;
uniform mat4 uProjection;
uniform mat4 uView;
varying vec3 vNormal;
varying vec4 vColor;
varying vec3 vViewPos;
void main() {
  vec4 viewPos = uView * vec4(aPosition, 1.0);
  gl_Position = uProjection * viewPos;
  vNormal = mat3(uView[0].xyz, uView[1].xyz, uView[2].xyz) * aNormal;
  vColor = aColor;
  vViewPos = viewPos.xyz;
}`;

const FRAG = `
precision mediump float;
varying vec3 vNormal;
varying vec4 vColor;
varying vec3 vViewPos;
void main() {
  vec3 n = normalize(vNormal);
  vec3 toEye = normalize(-vViewPos);
  float lambert = abs(dot(n, normalize(vec3(0.4, 0.7, 0.6))));
  float rim = pow(1.0 - abs(dot(n, toEye)), 2.0);
  vec3 lit = vColor.rgb * (0.35 + 0.65 * lambert) + rim * 0.25;
  gl_FragColor = vec4(lit, vColor.a);
}`;

interface GpuMesh {
  source: MeshBuffers;
  position: WebGLBuffer;
  normal: WebGLBuffer;
  color: WebGLBuffer;
  index: WebGLBuffer;
  count: number;
}

export class WebGLRenderer implements Renderer {
  readonly camera = { theta: 0.6, phi: 0.35, distance: 2.2 };
  private meshes = new Map<string, GpuMesh>();
  private program: WebGLProgram;
  private gl: WebGLRenderingContext;

  constructor(private canvas: HTMLCanvasElement, gl: WebGLRenderingContext) {
    this.gl = gl;
    this.program = this.compile();
    gl.enable(gl.DEPTH_TEST);
    gl.enable(gl.BLEND);
    gl.blendFunc(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA);
    this.attachControls();
  }

  private compile(): WebGLProgram {
    const gl = this.gl;
    const program = gl.createProgram()!;
    for (const [type, src] of [
      [gl.VERTEX_SHADER, VERT],
      [gl.FRAGMENT_SHADER, FRAG],
    ] as const) {
      const shader = gl.createShader(type)!;
      gl.shaderSource(shader, src);
      gl.compileShader(shader);
      if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
        throw new Error(gl.getShaderInfoLog(shader) ?? "shader compile failed");
      }
      gl.attachShader(program, shader);
    }
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(program) ?? "link failed");
    }
    return program;
  }

  private attachControls(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      this.camera.theta += (e.clientX - lastX) * 0.01;
      this.camera.phi = Math.max(
        -1.4,
        Math.min(1.4, this.camera.phi + (e.clientY - lastY) * 0.01),
      );
      lastX = e.clientX;
      lastY = e.clientY;
      this.render();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera.distance = Math.max(0.4, this.camera.distance * (1 + e.deltaY * 0.001));
      this.render();
    });
  }

  upload(mesh: MeshBuffers): void {
    const gl = this.gl;
    this.remove(mesh.id);
    const make = (data: ArrayBufferView, target: number) => {
      const buffer = gl.createBuffer()!;
      gl.bindBuffer(target, buffer);
      gl.bufferData(target, data, gl.STATIC_DRAW);
      return buffer;
    };
    this.meshes.set(mesh.id, {
      source: mesh,
      position: make(mesh.positions, gl.ARRAY_BUFFER),
      normal: make(mesh.normals, gl.ARRAY_BUFFER),
      color: make(mesh.colors, gl.ARRAY_BUFFER),
      index: make(mesh.indices, gl.ELEMENT_ARRAY_BUFFER),
      count: mesh.indices.length,
    });
    this.render();
  }

  updateColors(id: string, colors: Float32Array): void {
    const entry = this.meshes.get(id);
    if (!entry) return;
    entry.source.colors = colors;
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, entry.color);
    gl.bufferData(gl.ARRAY_BUFFER, colors, gl.STATIC_DRAW);
    this.render();
  }

  remove(id: string): void {
    const entry = this.meshes.get(id);
    if (!entry) return;
    const gl = this.gl;
    gl.deleteBuffer(entry.position);
    gl.deleteBuffer(entry.normal);
    gl.deleteBuffer(entry.color);
    gl.deleteBuffer(entry.index);
    this.meshes.delete(id);
    this.render();
  }

  clearMeshes(): void {
    for (const id of [...this.meshes.keys()]) this.remove(id);
  }

  private matrices(): { projection: Mat4; view: Mat4 } {
    const aspect = this.canvas.width / Math.max(this.canvas.height, 1);
    return {
      projection: mat4Perspective(0.9, aspect, 0.01, 50),
      view: orbitView(this.camera.theta, this.camera.phi, this.camera.distance, [0, 0, 0]),
    };
  }

  render(): void {
    const gl = this.gl;
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.clearColor(0.12, 0.13, 0.16, 1);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (!this.meshes.size) return;
    gl.useProgram(this.program);
    const { projection, view } = this.matrices();
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uProjection"), false, projection);
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uView"), false, view);
    const ext = gl.getExtension("OES_element_index_uint");
    if (!ext) throw new Error("OES_element_index_uint unsupported");
    for (const entry of this.meshes.values()) {
      const bind = (buffer: WebGLBuffer, name: string, size: number) => {
        const loc = gl.getAttribLocation(this.program, name);
        gl.bindBuffer(gl.ARRAY_BUFFER, buffer);
        gl.enableVertexAttribArray(loc);
        gl.vertexAttribPointer(loc, size, gl.FLOAT, false, 0, 0);
      };
      bind(entry.position, "aPosition", 3);
      bind(entry.normal, "aNormal", 3);
      bind(entry.color, "aColor", 4);
      gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, entry.index);
      gl.drawElements(gl.TRIANGLES, entry.count, gl.UNSIGNED_INT, 0);
    }
  }

  /** CPU projection of every vertex to canvas pixels; used for hover picking. */
  projectToScreen(id: string): Float32Array | null {
    const entry = this.meshes.get(id);
    if (!entry) return null;
    const { projection, view } = this.matrices();
    const mvp = mat4Multiply(projection, view);
    const pos = entry.source.positions;
    const out = new Float32Array((pos.length / 3) * 2);
    for (let i = 0; i < pos.length / 3; i++) {
      const x = pos[3 * i], y = pos[3 * i + 1], z = pos[3 * i + 2];
      const cx = mvp[0] * x + mvp[4] * y + mvp[8] * z + mvp[12];
      const cy = mvp[1] * x + mvp[5] * y + mvp[9] * z + mvp[13];
      const cw = mvp[3] * x + mvp[7] * y + mvp[11] * z + mvp[15];
      out[2 * i] = ((cx / cw) * 0.5 + 0.5) * this.canvas.width;
      out[2 * i + 1] = (0.5 - (cy / cw) * 0.5) * this.canvas.height;
    }
    return out;
  }
}

/** Headless stand-in recording uploads/colors; also the jsdom test double. */
export class RecordingRenderer implements Renderer {
  readonly camera = { theta: 0, phi: 0, distance: 2 };
  meshes = new Map<string, MeshBuffers>();
  colorUpdates: string[] = [];
  renderCount = 0;

  upload(mesh: MeshBuffers): void {
    this.meshes.set(mesh.id, mesh);
  }

  updateColors(id: string, colors: Float32Array): void {
    const mesh = this.meshes.get(id);
    if (mesh) {
      mesh.colors = colors;
      this.colorUpdates.push(id);
    }
  }

  remove(id: string): void {
    this.meshes.delete(id);
  }

  clearMeshes(): void {
    this.meshes.clear();
  }

  render(): void {
    this.renderCount += 1;
  }

  projectToScreen(): Float32Array | null {
    return null;
  }
}

export function createRenderer(canvas: HTMLCanvasElement): Renderer {
  const gl = canvas.getContext("webgl") as WebGLRenderingContext | null;
  if (!gl) return new RecordingRenderer();
  return new WebGLRenderer(canvas, gl);
}
