#!/usr/bin/env python3
"""Writes data/fixtures/corpus.jsonl: 20 instructions x 10 languages.

Each record carries the user text, a canned model reply (prose in the user's
language, action lines in English) and the canonical gold action strings.
"""
import json
import pathlib

LANGS = ["en", "es", "de", "fr", "ru", "zh", "ar", "hi", "sw", "pcm"]

INTRO = {
    "en": "Sure, here is the plan:",
    "es": "Claro, este es el plan:",
    "de": "Gern, hier ist der Plan:",
    "fr": "D'accord, voici le plan :",
    "ru": "Хорошо, вот план:",
    "zh": "好的，计划如下：",
    "ar": "حسنا، هذه هي الخطة:",
    "hi": "ठीक है, योजना यह है:",
    "sw": "Sawa, huu ndio mpango:",
    "pcm": "Okay, na di plan be dis:",
}

CAPABILITIES = {
    "en": "I can move and turn, follow shapes like circles and rectangles, go to coordinates, rooms or objects I detect, describe what I see, report my position and take pictures.",
    "es": "Puedo moverme y girar, seguir figuras como círculos y rectángulos, ir a coordenadas, habitaciones u objetos que detecto, describir lo que veo, informar mi posición y tomar fotos.",
    "de": "Ich kann fahren und mich drehen, Figuren wie Kreise und Rechtecke abfahren, zu Koordinaten, Räumen oder erkannten Objekten fahren, meine Umgebung beschreiben, meine Position melden und Fotos machen.",
    "fr": "Je peux avancer et tourner, suivre des formes comme des cercles et des rectangles, aller à des coordonnées, des pièces ou des objets détectés, décrire ce que je vois, indiquer ma position et prendre des photos.",
    "ru": "Я могу ездить и поворачиваться, двигаться по кругу и прямоугольнику, ехать к координатам, комнатам или обнаруженным предметам, описывать окружение, сообщать своё положение и делать снимки.",
    "zh": "我可以移动和转向，沿圆形或长方形等图形行驶，前往坐标、房间或检测到的物体，描述我看到的东西，报告我的位置并拍照。",
    "ar": "يمكنني التحرك والاستدارة، واتباع أشكال مثل الدوائر والمستطيلات، والذهاب إلى إحداثيات أو غرف أو أشياء أكتشفها، ووصف ما أراه، والإبلاغ عن موقعي والتقاط الصور.",
    "hi": "मैं चल सकता हूँ और मुड़ सकता हूँ, घेरे और आयत जैसी आकृतियों में चल सकता हूँ, निर्देशांकों, कमरों या पहचानी गई वस्तुओं तक जा सकता हूँ, आसपास का वर्णन कर सकता हूँ, अपनी स्थिति बता सकता हूँ और तस्वीरें ले सकता हूँ।",
    "sw": "Ninaweza kusonga na kugeuka, kufuata maumbo kama duara na mstatili, kwenda kwenye viwianishi, vyumba au vitu ninavyogundua, kueleza ninachokiona, kuripoti mahali nilipo na kupiga picha.",
    "pcm": "I fit waka and turn, I fit waka round for circle or rectangle, I fit go coordinates, room or tins wey I see, I fit tell you wetin dey around, where I dey, and I fit snap picture.",
}

# (category, gold canonical actions, reply-line variants, texts per language)
# Reply variants are chosen round-robin by language so the parser sees the
# phrasings a chat model tends to produce, not only the canonical form.
TASKS = [
    ("W_c",
     ["Move forward 2 m at 0.2 m/s.", "Turn right 90 deg at 30 deg/s."],
     [["Move forward 2 m at 0.2 m/s.", "Turn right 90 deg at 30 deg/s."],
      ["Move forward 2 meters at 0.2 m/s.", "Turn right at 30 deg/s."]],
     {
         "en": "Move forward 2 meters at 0.2m/s and then turn right at 30 deg/s.",
         "es": "Avanza 2 metros a 0.2 m/s y luego gira a la derecha a 30 grados por segundo.",
         "de": "Fahre 2 Meter vorwärts mit 0,2 m/s und drehe dich dann mit 30 Grad pro Sekunde nach rechts.",
         "fr": "Avance de 2 mètres à 0,2 m/s puis tourne à droite à 30 degrés par seconde.",
         "ru": "Проедь вперёд 2 метра со скоростью 0,2 м/с, затем повернись направо со скоростью 30 градусов в секунду.",
         "zh": "以0.2米/秒的速度向前移动2米，然后以每秒30度的速度向右转。",
         "ar": "تقدم إلى الأمام مترين بسرعة 0.2 متر في الثانية ثم استدر إلى اليمين بسرعة 30 درجة في الثانية.",
         "hi": "0.2 मीटर प्रति सेकंड की गति से 2 मीटर आगे बढ़ो और फिर 30 डिग्री प्रति सेकंड से दाईं ओर मुड़ो।",
         "sw": "Songa mbele mita 2 kwa kasi ya mita 0.2 kwa sekunde kisha ugeuke kulia kwa digrii 30 kwa sekunde.",
         "pcm": "Waka go front 2 meter for 0.2 m/s, den turn for your right hand for 30 degree every second.",
     }),
    ("W_c",
     ["Turn left 90 deg at 30 deg/s."],
     [["Turn left 90 degrees."], ["Rotate left 90 deg at 30 deg/s."]],
     {
         "en": "Rotate left 90 degrees.",
         "es": "Gira 90 grados a la izquierda.",
         "de": "Drehe dich um 90 Grad nach links.",
         "fr": "Tourne de 90 degrés vers la gauche.",
         "ru": "Повернись налево на 90 градусов.",
         "zh": "向左旋转90度。",
         "ar": "استدر إلى اليسار 90 درجة.",
         "hi": "बाईं ओर 90 डिग्री घूमो।",
         "sw": "Geuka kushoto digrii 90.",
         "pcm": "Turn for your left hand 90 degree.",
     }),
    ("W_c",
     ["Move in a circle of radius 1 m at 1 m/s."],
     [["Move in a circle of radius 1 meter at 1 m/s."], ["Move in a circle of radius 1 m at 1.0 m/s."]],
     {
         "en": "Move in a circle with a diameter of 2 meters at your maximum speed.",
         "es": "Muévete en un círculo de 2 metros de diámetro a tu velocidad máxima.",
         "de": "Fahre einen Kreis mit 2 Metern Durchmesser mit deiner Höchstgeschwindigkeit.",
         "fr": "Déplace-toi en cercle de 2 mètres de diamètre à ta vitesse maximale.",
         "ru": "Проедь по кругу диаметром 2 метра на максимальной скорости.",
         "zh": "以最大速度沿直径2米的圆移动。",
         "ar": "تحرك في دائرة قطرها 2 متر بأقصى سرعة لديك.",
         "hi": "अपनी अधिकतम गति से 2 मीटर व्यास वाले घेरे में घूमो।",
         "sw": "Tembea katika duara lenye kipenyo cha mita 2 kwa kasi yako ya juu kabisa.",
         "pcm": "Waka round for circle wey im diameter na 2 meter, use your full speed.",
     }),
    ("W_c",
     ["Move backward 1 m at 0.3 m/s."],
     [["Move backward 1 meter at 0.3 m/s."], ["Move backward 1 m at 0.3 m/s."]],
     {
         "en": "Move backward 1 meter at 0.3 m/s.",
         "es": "Retrocede 1 metro a 0.3 m/s.",
         "de": "Fahre 1 Meter rückwärts mit 0,3 m/s.",
         "fr": "Recule d'un mètre à 0,3 m/s.",
         "ru": "Отъедь назад на 1 метр со скоростью 0,3 м/с.",
         "zh": "以0.3米/秒的速度后退1米。",
         "ar": "تراجع إلى الخلف مترا واحدا بسرعة 0.3 متر في الثانية.",
         "hi": "0.3 मीटर प्रति सेकंड की गति से 1 मीटर पीछे जाओ।",
         "sw": "Rudi nyuma mita 1 kwa kasi ya mita 0.3 kwa sekunde.",
         "pcm": "Comot back 1 meter for 0.3 m/s.",
     }),
    ("W_c",
     ["Move forward 5 m at 0.25 m/s."],
     [["Move forward 500 cm at 0.25 m/s."], ["Move forward 5 meters at 0.25 m/s."]],
     {
         "en": "Convert 500 centimetres into meters and move forward that distance at 0.25 m/s.",
         "es": "Convierte 500 centímetros a metros y avanza esa distancia a 0.25 m/s.",
         "de": "Rechne 500 Zentimeter in Meter um und fahre diese Strecke mit 0,25 m/s vorwärts.",
         "fr": "Convertis 500 centimètres en mètres et avance de cette distance à 0,25 m/s.",
         "ru": "Переведи 500 сантиметров в метры и проедь это расстояние вперёд со скоростью 0,25 м/с.",
         "zh": "把500厘米换算成米，然后以0.25米/秒的速度向前移动这段距离。",
         "ar": "حوّل 500 سنتيمتر إلى أمتار وتقدم هذه المسافة بسرعة 0.25 متر في الثانية.",
         "hi": "500 सेंटीमीटर को मीटर में बदलो और 0.25 मीटर प्रति सेकंड की गति से उतनी दूरी आगे बढ़ो।",
         "sw": "Badilisha sentimita 500 kuwa mita kisha usonge mbele umbali huo kwa kasi ya mita 0.25 kwa sekunde.",
         "pcm": "Change 500 centimeter to meter, den waka go front dat distance for 0.25 m/s.",
     }),
    ("W_c",
     ["Move in a rectangle of length 3 m and width 2 m at 0.5 m/s."],
     [["Move in a rectangle of length 3 m and width 2 m at 0.5 m/s."],
      ["Move in a rectangle of length 3 meters and width 2 meters at 0.5 m/s."]],
     {
         "en": "Move in a rectangle of length 3 m and width 2 m at 0.5 m/s.",
         "es": "Recorre un rectángulo de 3 metros de largo y 2 metros de ancho a 0.5 m/s.",
         "de": "Fahre ein Rechteck von 3 Metern Länge und 2 Metern Breite mit 0,5 m/s.",
         "fr": "Parcours un rectangle de 3 mètres de long et 2 mètres de large à 0,5 m/s.",
         "ru": "Проедь по прямоугольнику длиной 3 метра и шириной 2 метра со скоростью 0,5 м/с.",
         "zh": "以0.5米/秒的速度沿长3米、宽2米的长方形行驶。",
         "ar": "تحرك في مستطيل طوله 3 أمتار وعرضه 2 متر بسرعة 0.5 متر في الثانية.",
         "hi": "0.5 मीटर प्रति सेकंड की गति से 3 मीटर लंबे और 2 मीटर चौड़े आयत में चलो।",
         "sw": "Tembea katika mstatili wenye urefu wa mita 3 na upana wa mita 2 kwa kasi ya mita 0.5 kwa sekunde.",
         "pcm": "Waka for rectangle wey im length na 3 meter and im width na 2 meter for 0.5 m/s.",
     }),
    ("G_n",
     ["Navigate to the coordinates x = 2, y = 3, z = 0 at 0.5 m/s."],
     [["Navigate to the coordinates x = 2, y = 3, z = 0 at 0.5 m/s."],
      ["Navigate to the coordinates x = 2.0, y = 3.0, z = 0.0 at 0.5 m/s."]],
     {
         "en": "Navigate to the coordinates (2, 3, 0) at 0.5 m/s.",
         "es": "Navega a las coordenadas (2, 3, 0) a 0.5 m/s.",
         "de": "Navigiere zu den Koordinaten (2, 3, 0) mit 0,5 m/s.",
         "fr": "Navigue jusqu'aux coordonnées (2, 3, 0) à 0,5 m/s.",
         "ru": "Доберись до координат (2, 3, 0) со скоростью 0,5 м/с.",
         "zh": "以0.5米/秒的速度导航到坐标(2, 3, 0)。",
         "ar": "انتقل إلى الإحداثيات (2، 3، 0) بسرعة 0.5 متر في الثانية.",
         "hi": "0.5 मीटर प्रति सेकंड की गति से निर्देशांक (2, 3, 0) पर जाओ।",
         "sw": "Elekea kwenye viwianishi (2, 3, 0) kwa kasi ya mita 0.5 kwa sekunde.",
         "pcm": "Waka go di coordinates (2, 3, 0) for 0.5 m/s.",
     }),
    ("G_n",
     ["Navigate to the kitchen at 0.2 m/s."],
     [["Navigate to the kitchen."], ["Navigate to the kitchen at 0.2 m/s."]],
     {
         "en": "Head to the kitchen.",
         "es": "Ve a la cocina.",
         "de": "Fahre in die Küche.",
         "fr": "Va à la cuisine.",
         "ru": "Иди на кухню.",
         "zh": "去厨房。",
         "ar": "اذهب إلى المطبخ.",
         "hi": "रसोई में जाओ।",
         "sw": "Nenda jikoni.",
         "pcm": "Waka go kitchen.",
     }),
    ("G_n",
     ["Navigate to the coordinates x = 2, y = 3, z = 0 at 0.5 m/s.", "Navigate to the kitchen at 0.5 m/s."],
     [["Navigate to the coordinates x = 2, y = 3, z = 0 at 0.5 m/s.", "Navigate to the kitchen at 0.5 m/s."]],
     {
         "en": "Navigate between (2, 3, 0) and the kitchen at 0.5 m/s.",
         "es": "Navega entre (2, 3, 0) y la cocina a 0.5 m/s.",
         "de": "Navigiere zwischen (2, 3, 0) und der Küche mit 0,5 m/s.",
         "fr": "Navigue entre (2, 3, 0) et la cuisine à 0,5 m/s.",
         "ru": "Проедь между точкой (2, 3, 0) и кухней со скоростью 0,5 м/с.",
         "zh": "以0.5米/秒的速度在(2, 3, 0)和厨房之间导航。",
         "ar": "تنقل بين النقطة (2، 3، 0) والمطبخ بسرعة 0.5 متر في الثانية.",
         "hi": "0.5 मीटर प्रति सेकंड की गति से (2, 3, 0) और रसोई के बीच जाओ।",
         "sw": "Elekea kati ya (2, 3, 0) na jikoni kwa kasi ya mita 0.5 kwa sekunde.",
         "pcm": "Waka between (2, 3, 0) and di kitchen for 0.5 m/s.",
     }),
    ("G_n",
     ["Navigate to the charging station at 0.2 m/s.", "Wait 5 s.", "Navigate to the secretary's office at 0.2 m/s."],
     [["Navigate to the charging station.", "Wait 5 seconds.", "Navigate to the secretary's office."],
      ["Navigate to the charging station at 0.2 m/s.", "Wait 5 s.", "Navigate to the secretary's office at 0.2 m/s."]],
     {
         "en": "Go to the charging station, wait 5 seconds, then go to the secretary's office.",
         "es": "Ve a la estación de carga, espera 5 segundos y luego ve a la oficina de la secretaria.",
         "de": "Fahre zur Ladestation, warte 5 Sekunden und fahre dann zum Sekretariat.",
         "fr": "Va à la station de recharge, attends 5 secondes, puis va au bureau de la secrétaire.",
         "ru": "Поезжай к зарядной станции, подожди 5 секунд, затем поезжай в кабинет секретаря.",
         "zh": "去充电站，等5秒，然后去秘书办公室。",
         "ar": "اذهب إلى محطة الشحن وانتظر 5 ثوان ثم اذهب إلى مكتب السكرتيرة.",
         "hi": "चार्जिंग स्टेशन पर जाओ, 5 सेकंड रुको, फिर सचिव के दफ़्तर जाओ।",
         "sw": "Nenda kwenye kituo cha kuchaji, subiri sekunde 5, kisha uende ofisi ya katibu.",
         "pcm": "Waka go di charging station, wait 5 second, den go di secretary office.",
     }),
    ("Q_i",
     [],
     None,
     {
         "en": "What are your capabilities?",
         "es": "¿Cuáles son tus capacidades?",
         "de": "Was sind deine Fähigkeiten?",
         "fr": "Quelles sont tes capacités ?",
         "ru": "Какие у тебя возможности?",
         "zh": "你有哪些能力？",
         "ar": "ما هي قدراتك؟",
         "hi": "तुम्हारी क्षमताएँ क्या हैं?",
         "sw": "Uwezo wako ni upi?",
         "pcm": "Wetin you fit do?",
     }),
    ("Q_i",
     ["Report current position and orientation."],
     [["Report current position and orientation."], ["Report your current position and orientation."]],
     {
         "en": "Report your current position and orientation.",
         "es": "Informa tu posición y orientación actuales.",
         "de": "Melde deine aktuelle Position und Ausrichtung.",
         "fr": "Indique ta position et ton orientation actuelles.",
         "ru": "Сообщи своё текущее положение и ориентацию.",
         "zh": "报告你当前的位置和朝向。",
         "ar": "أبلغ عن موقعك واتجاهك الحاليين.",
         "hi": "अपनी वर्तमान स्थिति और दिशा बताओ।",
         "sw": "Ripoti mahali ulipo sasa na unakoelekea.",
         "pcm": "Tell me where you dey now and which side you face.",
     }),
    ("Q_i",
     ["Describe surroundings."],
     [["Describe surroundings."], ["Describe the surroundings."]],
     {
         "en": "Describe your surroundings.",
         "es": "Describe tu entorno.",
         "de": "Beschreibe deine Umgebung.",
         "fr": "Décris ton environnement.",
         "ru": "Опиши, что тебя окружает.",
         "zh": "描述一下你周围的环境。",
         "ar": "صف ما يحيط بك.",
         "hi": "अपने आसपास का वर्णन करो।",
         "sw": "Eleza mazingira yako.",
         "pcm": "Tell me wetin dey around you.",
     }),
    ("Q_i",
     ["Capture image."],
     [["Capture image."], ["Capture an image."]],
     {
         "en": "Take a photo of what is in front of you.",
         "es": "Toma una foto de lo que tienes delante.",
         "de": "Mach ein Foto von dem, was vor dir ist.",
         "fr": "Prends une photo de ce qui est devant toi.",
         "ru": "Сфотографируй то, что перед тобой.",
         "zh": "拍一张你前面的照片。",
         "ar": "التقط صورة لما أمامك.",
         "hi": "अपने सामने की एक तस्वीर लो।",
         "sw": "Piga picha ya kilicho mbele yako.",
         "pcm": "Snap picture of wetin dey your front.",
     }),
    ("O_n",
     ["Navigate to the detected chair at 0.2 m/s."],
     [["Navigate to the detected chair."], ["Navigate to the detected chair at 0.2 m/s."]],
     {
         "en": "Move toward the chair you detected.",
         "es": "Acércate a la silla que detectaste.",
         "de": "Fahre zu dem Stuhl, den du erkannt hast.",
         "fr": "Va vers la chaise que tu as détectée.",
         "ru": "Подъедь к стулу, который ты обнаружил.",
         "zh": "走向你检测到的那把椅子。",
         "ar": "تحرك نحو الكرسي الذي اكتشفته.",
         "hi": "जो कुर्सी तुमने पहचानी है उसकी ओर जाओ।",
         "sw": "Songa kuelekea kiti ulichokigundua.",
         "pcm": "Waka go di chair wey you don see.",
     }),
    ("O_n",
     ["Navigate to the detected object with the highest confidence at 0.2 m/s."],
     [["Go to the detected object with the highest confidence."],
      ["Navigate to the detected object with the highest confidence at 0.2 m/s."]],
     {
         "en": "Navigate to the detected object with the highest confidence.",
         "es": "Navega hacia el objeto detectado con la mayor confianza.",
         "de": "Navigiere zu dem erkannten Objekt mit der höchsten Konfidenz.",
         "fr": "Navigue vers l'objet détecté avec la plus haute confiance.",
         "ru": "Подъедь к обнаруженному объекту с наибольшей уверенностью.",
         "zh": "导航到置信度最高的检测物体。",
         "ar": "انتقل إلى الشيء المكتشف ذي أعلى ثقة.",
         "hi": "सबसे अधिक विश्वास वाली पहचानी गई वस्तु तक जाओ।",
         "sw": "Elekea kitu kilichogunduliwa chenye uhakika wa juu zaidi.",
         "pcm": "Waka go di tin wey you see wey get di highest confidence.",
     }),
    ("O_n",
     ["If detection of person above 0.8: Capture image. Else: Turn left 90 deg at 30 deg/s."],
     [["If detection of person above 0.8: Capture image. Else: Turn left 90 deg at 30 deg/s."],
      ["If detection of person above 80%: Capture image. Else: Turn left 90 degrees."]],
     {
         "en": "If you detect a person with probability of at least 80%, take a picture, otherwise turn left.",
         "es": "Si detectas a una persona con una probabilidad de al menos 80%, toma una foto; si no, gira a la izquierda.",
         "de": "Wenn du eine Person mit mindestens 80 % Wahrscheinlichkeit erkennst, mach ein Foto, sonst drehe dich nach links.",
         "fr": "Si tu détectes une personne avec une probabilité d'au moins 80 %, prends une photo, sinon tourne à gauche.",
         "ru": "Если ты обнаружишь человека с вероятностью не менее 80%, сделай снимок, иначе повернись налево.",
         "zh": "如果你以至少80%的概率检测到一个人，就拍一张照片，否则向左转。",
         "ar": "إذا اكتشفت شخصا باحتمال 80% على الأقل فالتقط صورة، وإلا فاستدر إلى اليسار.",
         "hi": "अगर तुम्हें कम से कम 80% संभावना के साथ कोई व्यक्ति दिखे तो तस्वीर लो, नहीं तो बाईं ओर मुड़ो।",
         "sw": "Ukigundua mtu kwa uwezekano wa angalau 80%, piga picha, la sivyo geuka kushoto.",
         "pcm": "If you see person wey e sure reach 80%, snap picture, if not turn for your left hand.",
     }),
    ("C_r",
     ["Navigate to the kitchen at 0.2 m/s."],
     [["Navigate to the kitchen."], ["Navigate to the kitchen at 0.2 m/s."]],
     {
         "en": "Head to the location where one can cook food.",
         "es": "Dirígete al lugar donde se puede cocinar.",
         "de": "Fahre zu dem Ort, an dem man Essen kochen kann.",
         "fr": "Va à l'endroit où l'on peut cuisiner.",
         "ru": "Отправляйся туда, где можно приготовить еду.",
         "zh": "去可以做饭的地方。",
         "ar": "اذهب إلى المكان الذي يمكن فيه طهي الطعام.",
         "hi": "उस जगह जाओ जहाँ खाना पकाया जा सकता है।",
         "sw": "Nenda mahali ambapo mtu anaweza kupika chakula.",
         "pcm": "Waka go di place wey person fit cook food.",
     }),
    ("C_r",
     ["Navigate to the secretary's office at 0.2 m/s."],
     [["Navigate to the secretary's office."], ["Navigate to the secretary's office at 0.2 m/s."]],
     {
         "en": "Go to where administrative tasks are handled.",
         "es": "Ve al lugar donde se gestionan las tareas administrativas.",
         "de": "Fahre dorthin, wo Verwaltungsaufgaben erledigt werden.",
         "fr": "Va là où les tâches administratives sont traitées.",
         "ru": "Поезжай туда, где решаются административные вопросы.",
         "zh": "去处理行政事务的地方。",
         "ar": "اذهب إلى حيث تتم معالجة المهام الإدارية.",
         "hi": "वहाँ जाओ जहाँ प्रशासनिक काम किए जाते हैं।",
         "sw": "Nenda mahali ambapo kazi za utawala hushughulikiwa.",
         "pcm": "Waka go where dem dey handle office paper work.",
     }),
    ("C_r",
     ["If travel time to x = 5, y = 5, z = 0 at 1 m/s over 10 s: Navigate to the kitchen at 0.2 m/s. "
      "Else: Navigate to the coordinates x = 5, y = 5, z = 0 at 1 m/s."],
     [["If travel time to x = 5, y = 5, z = 0 at 1 m/s over 10 s: Navigate to the kitchen. "
       "Else: Navigate to the coordinates x = 5, y = 5, z = 0 at 1 m/s."]],
     {
         "en": "If it would take more than 10 seconds to reach (5, 5, 0) at 1 m/s, go to the kitchen instead; otherwise go to (5, 5, 0).",
         "es": "Si tardarías más de 10 segundos en llegar a (5, 5, 0) a 1 m/s, ve a la cocina; si no, ve a (5, 5, 0).",
         "de": "Wenn du mit 1 m/s mehr als 10 Sekunden bis (5, 5, 0) brauchst, fahre stattdessen in die Küche, sonst fahre zu (5, 5, 0).",
         "fr": "S'il te faut plus de 10 secondes pour atteindre (5, 5, 0) à 1 m/s, va à la cuisine, sinon va à (5, 5, 0).",
         "ru": "Если дорога до (5, 5, 0) со скоростью 1 м/с займёт больше 10 секунд, поезжай на кухню, иначе поезжай в (5, 5, 0).",
         "zh": "如果以1米/秒的速度到达(5, 5, 0)需要超过10秒，就去厨房，否则去(5, 5, 0)。",
         "ar": "إذا كان الوصول إلى (5، 5، 0) بسرعة 1 متر في الثانية سيستغرق أكثر من 10 ثوان فاذهب إلى المطبخ، وإلا فاذهب إلى (5، 5، 0).",
         "hi": "अगर 1 मीटर प्रति सेकंड की गति से (5, 5, 0) तक पहुँचने में 10 सेकंड से ज़्यादा लगें तो रसोई जाओ, नहीं तो (5, 5, 0) पर जाओ।",
         "sw": "Ikiwa itakuchukua zaidi ya sekunde 10 kufika (5, 5, 0) kwa kasi ya mita 1 kwa sekunde, nenda jikoni, la sivyo nenda (5, 5, 0).",
         "pcm": "If e go pass 10 second to reach (5, 5, 0) for 1 m/s, go kitchen, if e no pass, go (5, 5, 0).",
     }),
]


def reply_for(lang_index, lang, variants):
    if variants is None:
        return CAPABILITIES[lang]
    lines = variants[lang_index % len(variants)]
    # A few replies use markdown-bold numbering, as chat models often do.
    bold = lang in ("zh", "sw")
    body = [
        (f"**Action {k}:** {line}" if bold else f"Action {k}: {line}")
        for k, line in enumerate(lines, start=1)
    ]
    return "\n".join([INTRO[lang]] + body)


def main():
    root = pathlib.Path(__file__).resolve().parents[2]
    out = root / "data" / "fixtures" / "corpus.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as f:
        for li, lang in enumerate(LANGS):
            for category, gold, variants, texts in TASKS:
                rec = {
                    "lang": lang,
                    "text": texts[lang],
                    "reply": reply_for(li, lang, variants),
                    "gold_actions": gold,
                    "category": category,
                }
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(out)


if __name__ == "__main__":
    main()
